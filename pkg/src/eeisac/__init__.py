"""Energy-efficient beamforming design for sensing-and-communication MIMO."""

from .metrics import (BeamformerSolution, MetricReport, crb_extended,
                      crb_point, crb_point_from_cov, ee_comm, ee_sense,
                      sinr_k, sum_rate)
from .scenario import (ChannelSet, SystemConfig, dbm_to_watt, db_to_linear,
                       default_config, draw_channels, make_config,
                       watt_to_dbm)
from .sdp_core import ConeProblem, SdpModel, SolveReport, SolverOptions, solve
from .solvers import (AlgorithmOptions, InfeasibleScenario, SolverError,
                      baseline_power_min, baseline_sumrate_max,
                      solve_eec_extended, solve_eec_point, solve_ees_extended,
                      solve_ees_point, solve_pareto_point)
from .steering import steering, steering_derivative

__version__ = "0.1.0"

__all__ = [
    "AlgorithmOptions", "BeamformerSolution", "ChannelSet", "ConeProblem",
    "InfeasibleScenario", "MetricReport", "SdpModel", "SolveReport",
    "SolverError", "SolverOptions", "SystemConfig", "baseline_power_min",
    "baseline_sumrate_max", "crb_extended", "crb_point", "crb_point_from_cov",
    "db_to_linear", "dbm_to_watt", "default_config", "draw_channels",
    "ee_comm", "ee_sense", "make_config", "sinr_k", "solve",
    "solve_eec_extended", "solve_eec_point", "solve_ees_extended",
    "solve_ees_point", "solve_pareto_point", "steering",
    "steering_derivative", "sum_rate", "watt_to_dbm",
]
