"""Outer iterative algorithms for energy-efficient beamforming.

All main loops run on the lifted covariances (one PSD matrix per user, plus
the probing covariance in the extended-target case).  Per-user signal
amplitudes enter through auxiliary scalars s_k with s_k^2 <= tr(Q_k W_k), so
every subproblem is a plain SDP whose objective surrogate globally
under-estimates the true utility and touches it at the previous iterate;
ratio (Dinkelbach) sequences are therefore non-decreasing by construction.

The lifted-block-plus-cut machinery that pins iterates to rank one is used in
two places only: the penalty warm-up that manufactures feasible starting
points, and a polishing pass that repairs the rare case where the final
covariance is not numerically rank one.  Everything else relies on the
empirical (and here continuously audited) tightness of the relaxation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import constraints as con
from . import metrics, oracle, recovery
from .scenario import ChannelSet, SystemConfig
from .sdp_core import LinExpr, SdpModel, SolverOptions, solve

LN2 = con.LN2

# solutions from an accuracy-floored subproblem are still usable as ascent
# steps when their KKT quality is at this level or better
DEGRADED_KKT_TOL = 1e-5


class SolverError(RuntimeError):
    """Subproblem failure with the offending report attached."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class InfeasibleScenario(RuntimeError):
    """Constraints cannot be met; carries the slack/certificate context."""

    def __init__(self, message, slack=None):
        super().__init__(message)
        self.slack = slack


@dataclass(frozen=True)
class AlgorithmOptions:
    delta: float = 1e-4             # outer stopping tolerance
    max_outer: int = 50
    inner_max: int = 3              # subproblem refreshes at fixed ratio
    init_strategy: str = "rzf"
    penalty_p0: float = 1.0
    penalty_mult: float = 5.0
    penalty_rounds: int = 10
    penalty_tol: float = 1e-6
    solver: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("delta must be > 0")


@dataclass
class OuterLoopState:
    iteration: int = 0
    lam: float = 0.0
    t: np.ndarray | None = None
    b: np.ndarray | None = None
    lin: con.LinearizationPoint | None = None
    objective_history: list = field(default_factory=list)
    stop_reason: str = ""


def _solve_step(model: SdpModel, opts: AlgorithmOptions, what: str):
    """Solve a subproblem; returns (x, degraded_flag).

    'optimal' must satisfy the solver's KKT contract.  A numerically floored
    solve still yields a usable near-feasible point for an ascent step; it is
    flagged so callers can stop ratio loops gracefully instead of failing.
    """
    prob = model.build()
    rep = solve(prob, opts.solver)
    if rep.status == "infeasible":
        raise InfeasibleScenario(f"{what}: subproblem infeasible")
    if rep.optimal:
        return rep.x, False
    if rep.x is not None and max(rep.kkt) <= DEGRADED_KKT_TOL:
        return rep.x, True
    raise SolverError(f"{what}: solver returned {rep.status} "
                      f"({rep.message}); kkt={rep.kkt}", report=rep)


def _rotate(w_list, channels) -> list:
    out = []
    for k, w in enumerate(w_list):
        ip = channels.h[k].conj() @ w
        out.append(w * np.exp(-1j * np.angle(ip)) if abs(ip) > 0 else w.copy())
    return out


def _rzf_start(cfg: SystemConfig, channels: ChannelSet,
               power_frac: float = 0.9) -> list:
    """Regularized zero-forcing directions with an equal power split."""
    h = channels.h
    gram = h @ h.conj().T + 0.1 * np.eye(cfg.K)
    v = h.conj().T @ np.linalg.inv(gram)
    p_each = power_frac * cfg.Pmax / cfg.K
    cols = []
    for k in range(cfg.K):
        col = v[:, k]
        nrm = np.linalg.norm(col)
        col = col / nrm if nrm > 0 else np.ones(cfg.M) / np.sqrt(cfg.M)
        cols.append(np.sqrt(p_each) * col)
    return _rotate(cols, channels)


def _sdr_quantities(W_list, R, channels, cfg):
    """(signal powers, interference-plus-noise, SINR) in trace form."""
    sig = np.zeros(cfg.K)
    b = np.zeros(cfg.K)
    for k in range(cfg.K):
        h = channels.h[k]
        sig[k] = max(float(np.real(h.conj() @ W_list[k] @ h)), 0.0)
        acc = cfg.sigma_c2
        for j in range(cfg.K):
            if j != k:
                acc += float(np.real(h.conj() @ W_list[j] @ h))
        if R is not None:
            acc += float(np.real(h.conj() @ R @ h))
        b[k] = acc
    return sig, b, sig / b


def _consumed(W_list, R, cfg) -> float:
    p = sum(float(np.real(np.trace(W))) for W in W_list)
    if R is not None:
        p += float(np.real(np.trace(R)))
    return p / cfg.eps_pa + cfg.P0


def _sdr_f1_f2(W_list, R, channels, cfg):
    _, _, sinr = _sdr_quantities(W_list, R, channels, cfg)
    return float(np.sum(np.log2(1.0 + sinr))), _consumed(W_list, R, cfg)


# ---------------------------------------------------------------------------
# point-target building blocks
# ---------------------------------------------------------------------------


def _point_base(cfg, channels, crb_bound):
    """Model skeleton shared by the point-target subproblems."""
    m = SdpModel()
    v = con.beamformer_vars(m, cfg, vectors=False)
    for Wk in v.W:
        m.psd(Wk)
    con.sinr_sdr(m, v, channels, cfg)
    power = con.power_budget(m, v, cfg)
    con.crb_schur_lmi(m, v, channels, cfg, crb_bound)
    return m, v, power


def _amplitude_vars(m, v, channels, cfg):
    """s_k >= 0 with s_k^2 <= tr(Q_k W_k): lifted per-user signal amplitude."""
    s_vars = []
    for k in range(cfg.K):
        q = np.outer(channels.h[k], channels.h[k].conj())
        s_k = m.scalar(nonneg=True)
        m.add_lmi([[LinExpr(const=1.0), s_k], [s_k, v.W[k].trace_form(q).re]])
        s_vars.append(s_k)
    return s_vars


def _rate_surrogate(m, v, s_vars, channels, cfg, t, u_prev):
    """Hypographed quadratic-transform rate surrogate (bits)."""
    obj = LinExpr()
    for k in range(cfg.K):
        q = np.outer(channels.h[k], channels.h[k].conj())
        bexp = LinExpr(const=cfg.sigma_c2)
        for j in range(cfg.K):
            if j != k:
                bexp = bexp + v.W[j].trace_form(q).re
        u = s_vars[k] * (2.0 * t[k]) - bexp * (t[k] ** 2)
        m.add_ineq(-u)
        z = m.scalar()
        con.concave_chords(m, z, u, lambda x: float(np.log2(1.0 + x)),
                           con._knot_ladder(u_prev[k], 0.0))
        obj = obj + z
    return obj


def _point_feasible_start(cfg, channels, crb_bound, opts):
    """RZF if it already satisfies everything, else the power-minimal SDR
    point (whose solve certifies infeasibility when the scenario is
    over-constrained)."""
    w0 = _rzf_start(cfg, channels)
    W_list = [np.outer(w, w.conj()) for w in w0]
    sol = metrics.BeamformerSolution(W=np.column_stack(w0))
    if oracle.audit_solution(sol, cfg, channels, crb_bound=crb_bound).ok:
        return W_list
    m, v, power = _point_base(cfg, channels, crb_bound)
    m.maximize(power * (-1.0))
    x, _ = _solve_step(m, opts, "feasible-start power minimization")
    return [v.W[k].value(x) for k in range(cfg.K)]


def _point_ratio_loop(cfg, channels, crb_bound, opts, *, fixed_lam=None,
                      objective="ee"):
    """Shared ascent loop: 'ee' runs the ratio iteration, 'rate' maximizes
    the sum rate at zero ratio, 'power' minimizes transmit power."""
    trace = []
    W_list = _point_feasible_start(cfg, channels, crb_bound, opts)
    state = OuterLoopState()
    f1, f2 = _sdr_f1_f2(W_list, None, channels, cfg)
    lam = (f1 / f2) if fixed_lam is None else fixed_lam
    prev_obj = None
    small_changes = 0
    stop = "max-outer"
    degraded = False
    for it in range(opts.max_outer):
        cur_val = (f1 - lam * f2) if objective != "power" else \
            -sum(float(np.real(np.trace(W))) for W in W_list)
        for inner in range(max(opts.inner_max, 1)):
            sig, b, sinr = _sdr_quantities(W_list, None, channels, cfg)
            t = np.sqrt(sig) / b
            m, v, power = _point_base(cfg, channels, crb_bound)
            if objective == "power":
                m.maximize(power * (-1.0))
            else:
                s_vars = _amplitude_vars(m, v, channels, cfg)
                obj = _rate_surrogate(m, v, s_vars, channels, cfg, t, sinr)
                obj = obj - (power * (1.0 / cfg.eps_pa) + cfg.P0) * lam
                m.maximize(obj)
            x, deg = _solve_step(m, opts, f"{objective} subproblem")
            degraded = degraded or deg
            W_new = [v.W[k].value(x) for k in range(cfg.K)]
            f1n, f2n = _sdr_f1_f2(W_new, None, channels, cfg)
            val = (f1n - lam * f2n) if objective != "power" else \
                -sum(float(np.real(np.trace(W))) for W in W_new)
            improved = val >= cur_val - 1e-12
            if improved:
                W_list, f1, f2 = W_new, f1n, f2n
            if deg or not improved or \
                    val - cur_val < opts.delta / 10 * (1 + abs(val)):
                cur_val = max(val, cur_val)
                break
            cur_val = val

        residual = f1 - lam * f2
        obj_now = {"ee": f1 / f2, "rate": f1,
                   "power": -sum(float(np.real(np.trace(W))) for W in W_list)
                   }[objective]
        trace.append({"phase": "outer", "iter": it, "lambda": lam,
                      "objective": obj_now, "residual": residual,
                      "f1": f1, "f2": f2, "degraded": degraded})
        state.iteration = it
        state.objective_history.append(obj_now)
        if objective == "ee":
            if residual < opts.delta * (1 + abs(f1)):
                stop = "ratio-residual"
                break
            lam = f1 / f2
        else:
            if prev_obj is not None and \
                    abs(obj_now - prev_obj) < opts.delta / 10 * (1 + abs(obj_now)):
                small_changes += 1
                if small_changes >= 3:
                    stop = "objective-stall"
                    break
            else:
                small_changes = 0
            prev_obj = obj_now
        if degraded and it >= 1:
            stop = "subproblem-accuracy-floor"
            break
    state.lam = lam if objective == "ee" else f1 / f2
    state.stop_reason = stop
    return W_list, state, trace


def _rank1_polish(W_list, cfg, channels, crb_bound, opts, trace, objective):
    """Penalty-form rank-one repair: lifted blocks plus slacked concave cuts
    with an escalating weight, anchored at the projected vectors.  Accepts the
    first iterate that passes the feasibility audit."""
    w_list = _rotate([recovery._projected_vector(W, channels.h[k])
                      for k, W in enumerate(W_list)], channels)
    p_bar = opts.penalty_p0 * 5.0
    for round_ in range(opts.penalty_rounds):
        Wl = [np.outer(w, w.conj()) for w in w_list]
        sig, b, sinr = _sdr_quantities(Wl, None, channels, cfg)
        t = np.sqrt(sig) / b
        f1, f2 = _sdr_f1_f2(Wl, None, channels, cfg)
        m = SdpModel()
        v = con.beamformer_vars(m, cfg, vectors=True)
        slacks = []
        for k in range(cfg.K):
            sl = m.scalar(nonneg=True)
            con.rank1_lemma_constraints(m, v, k, w_list[k], slack=sl)
            slacks.append(sl)
        con.sinr_sdr(m, v, channels, cfg)
        power = con.power_budget(m, v, cfg)
        con.crb_schur_lmi(m, v, channels, cfg, crb_bound)
        if objective == "power":
            obj = power * (-1.0)
        else:
            s_vars = _amplitude_vars(m, v, channels, cfg)
            obj = _rate_surrogate(m, v, s_vars, channels, cfg, t, sinr)
            obj = obj - (power * (1.0 / cfg.eps_pa) + cfg.P0) * (f1 / f2)
        con.penalty_objective(m, obj, slacks, p_bar)
        try:
            x, _ = _solve_step(m, opts, "rank-one polish")
        except (SolverError, InfeasibleScenario):
            break
        w_list = _rotate([v.w[k].value(x) for k in range(cfg.K)], channels)
        slack_sum = float(sum(x[s.idx] for s in slacks))
        trace.append({"phase": "polish", "round": round_, "p_bar": p_bar,
                      "slack": slack_sum})
        sol = metrics.BeamformerSolution(W=np.column_stack(w_list))
        if oracle.audit_solution(sol, cfg, channels, crb_bound=crb_bound).ok:
            return w_list
        p_bar *= opts.penalty_mult
    raise SolverError("rank-one polish could not restore feasibility")


def _finalize_point(W_list, channels, cfg, crb_bound, trace, state, opts):
    w_rec, _, rank_rep = recovery.recover_rank1(W_list, None, channels, cfg)
    sol = metrics.BeamformerSolution(W=np.column_stack(w_rec), trace=trace)
    audit = oracle.audit_solution(sol, cfg, channels, crb_bound=crb_bound)
    if not audit.ok:
        w_rec = _rank1_polish(W_list, cfg, channels, crb_bound, opts, trace,
                              objective="ee")
        sol = metrics.BeamformerSolution(W=np.column_stack(w_rec), trace=trace)
        audit = oracle.audit_solution(sol, cfg, channels, crb_bound=crb_bound)
        rank_rep = recovery.RankReport(spectra=[], ranks=[1] * cfg.K,
                                       path="closed-form")
    rep = metrics.report(sol, channels, cfg)
    sol.achieved = {"ee_c": rep.ee_c, "ee_s": rep.ee_s, "sum_rate": rep.sum_rate,
                    "p_total": rep.P_total, "crb": rep.crb,
                    "sinr": rep.sinr.tolist(), "lambda": state.lam,
                    "stop_reason": state.stop_reason,
                    "audit_ok": audit.ok,
                    "audit_violation": audit.max_violation,
                    "rank_path": rank_rep.path}
    return sol


def solve_eec_point(cfg: SystemConfig, channels: ChannelSet,
                    opts: AlgorithmOptions | None = None):
    """Communication-centric EE maximization for a point target."""
    opts = opts or AlgorithmOptions()
    crb_bound = cfg.rho ** 2
    W_list, state, trace = _point_ratio_loop(cfg, channels, crb_bound, opts)
    return _finalize_point(W_list, channels, cfg, crb_bound, trace, state, opts)


def baseline_sumrate_max(cfg: SystemConfig, channels: ChannelSet,
                         opts: AlgorithmOptions | None = None):
    """Sum-rate maximization under the same constraints (zero-ratio loop)."""
    opts = opts or AlgorithmOptions()
    crb_bound = cfg.rho ** 2
    W_list, state, trace = _point_ratio_loop(cfg, channels, crb_bound, opts,
                                             fixed_lam=0.0, objective="rate")
    return _finalize_point(W_list, channels, cfg, crb_bound, trace, state, opts)


def baseline_power_min(cfg: SystemConfig, channels: ChannelSet,
                       opts: AlgorithmOptions | None = None):
    """Transmit-power minimization under the SINR and sensing constraints."""
    opts = opts or AlgorithmOptions()
    crb_bound = cfg.rho ** 2
    W_list, state, trace = _point_ratio_loop(cfg, channels, crb_bound, opts,
                                             fixed_lam=0.0, objective="power")
    sol = _finalize_point(W_list, channels, cfg, crb_bound, trace, state, opts)
    return sol


def solve_ees_point(cfg: SystemConfig, channels: ChannelSet,
                    opts: AlgorithmOptions | None = None):
    """Sensing-centric EE maximization for a point target: ascent on the
    inverse-CRB-per-joule chain with per-iteration concave cuts."""
    opts = opts or AlgorithmOptions()
    crb_bound = cfg.rho ** 2
    trace = []
    W_list = _point_feasible_start(cfg, channels, crb_bound, opts)
    state = OuterLoopState()

    def chain_scalars(W_list):
        rx = sum(W_list)
        t_f = metrics.fisher_term(rx, channels.theta)
        phi = _consumed(W_list, None, cfg)
        sig, b, _ = _sdr_quantities(W_list, None, channels, cfg)
        sc = {"phi": phi, "zeta": np.sqrt(max(t_f, 1e-12))}
        for k in range(cfg.K):
            sc[f"tau_{k}"] = np.sqrt(sig[k])
            sc[f"psi_{k}"] = b[k]
        return sc, t_f / phi

    stop = "max-outer"
    small = 0
    omega_cur = None
    for it in range(opts.max_outer):
        scal, omega_now = chain_scalars(W_list)
        omega_cur = omega_now if omega_cur is None else max(omega_cur, omega_now)
        m = SdpModel()
        v = con.beamformer_vars(m, cfg, vectors=False)
        for Wk in v.W:
            m.psd(Wk)
        con.power_budget(m, v, cfg)
        con.crb_schur_lmi(m, v, channels, cfg, crb_bound)
        con.epigraph_sensing_point(m, v, channels, cfg,
                                   con.LinearizationPoint(w_prev=[],
                                                          scalars_prev=scal))
        x, deg = _solve_step(m, opts, "sensing-chain subproblem")
        W_new = [v.W[k].value(x) for k in range(cfg.K)]
        _, omega_new = chain_scalars(W_new)
        if omega_new >= omega_cur - 1e-12:
            W_list = W_new
            omega_cur = max(omega_cur, omega_new)
        trace.append({"phase": "outer", "iter": it, "objective": omega_cur,
                      "omega": omega_new, "degraded": deg})
        state.objective_history.append(omega_cur)
        if abs(omega_new - omega_now) < opts.delta / 10 * (1 + abs(omega_new)):
            small += 1
            if small >= 3:
                stop = "objective-stall"
                break
        else:
            small = 0
        if deg and it >= 1:
            stop = "subproblem-accuracy-floor"
            break
    state.stop_reason = stop
    return _finalize_point(W_list, channels, cfg, crb_bound, trace, state, opts)


# ---------------------------------------------------------------------------
# extended-target solvers
# ---------------------------------------------------------------------------


def _extended_vars(m, cfg):
    v = con.beamformer_vars(m, cfg, vectors=False, probe=True)
    for Wk in v.W:
        m.psd(Wk)
    return v


def _extended_init(cfg, channels, opts) -> tuple:
    """Feasible start from relaxed power minimization under SINR + matrix-CRB
    constraints (full-rank covariance guaranteed by the inverse bound)."""
    m = SdpModel()
    v = _extended_vars(m, cfg)
    con.sinr_sdr(m, v, channels, cfg, include_probe=True)
    power = con.power_budget(m, v, cfg)
    _, tr_y, _ = con.trace_inverse_epigraph(m, v, cfg)
    m.add_ineq(tr_y * (cfg.sigma_s2 * cfg.M / cfg.L) - cfg.rho)
    m.maximize(power * (-1.0))
    x, _ = _solve_step(m, opts, "extended-target initialization")
    W_list = [v.W[k].value(x) for k in range(cfg.K)]
    return W_list, v.R.value(x)


def _finalize_extended(W_list, R, channels, cfg, trace, state):
    w_rec, r_new, rank_rep = recovery.recover_rank1(W_list, R, channels, cfg)
    sol = metrics.BeamformerSolution(W=np.column_stack(w_rec), Rprobe=r_new,
                                     trace=trace)
    rep = metrics.report(sol, channels, cfg, extended=True)
    audit = oracle.audit_solution(sol, cfg, channels, extended=True,
                                  crb_bound=cfg.rho)
    sol.achieved = {"ee_c": rep.ee_c, "ee_s": rep.ee_s, "sum_rate": rep.sum_rate,
                    "p_total": rep.P_total, "crb": rep.crb,
                    "sinr": rep.sinr.tolist(), "lambda": state.lam,
                    "stop_reason": state.stop_reason,
                    "audit_ok": audit.ok,
                    "audit_violation": audit.max_violation,
                    "rank_path": rank_rep.path,
                    "rank_deltas": rank_rep.deltas}
    return sol


def solve_eec_extended(cfg: SystemConfig, channels: ChannelSet,
                       opts: AlgorithmOptions | None = None):
    """Communication-centric EE maximization with a dedicated probing
    covariance for extended-target estimation (cfg.rho read as the
    matrix-CRB bound)."""
    opts = opts or AlgorithmOptions()
    trace = []
    W_list, R = _extended_init(cfg, channels, opts)
    state = OuterLoopState()
    f1, f2 = _sdr_f1_f2(W_list, R, channels, cfg)
    lam = f1 / f2
    stop = "max-outer"
    degraded = False
    for it in range(opts.max_outer):
        cur_val = f1 - lam * f2
        for inner in range(max(opts.inner_max, 1)):
            rx = sum(W_list) + R
            v_prev = np.zeros(cfg.K)
            b_aux = np.zeros(cfg.K)
            for k in range(cfg.K):
                h = channels.h[k]
                tot = float(np.real(h.conj() @ rx @ h)) + cfg.sigma_c2
                own = float(np.real(h.conj() @ W_list[k] @ h))
                v_prev[k] = tot
                b_aux[k] = 1.0 / (tot - own)
            m = SdpModel()
            v = _extended_vars(m, cfg)
            con.sinr_sdr(m, v, channels, cfg, include_probe=True)
            con.power_budget(m, v, cfg)
            con.extended_target_fragments(m, v, channels, cfg, mode="comm",
                                          lam=lam, b=b_aux, v_prev=v_prev,
                                          crb_bound=cfg.rho)
            x, deg = _solve_step(m, opts, "extended ratio subproblem")
            degraded = degraded or deg
            W_new = [v.W[k].value(x) for k in range(cfg.K)]
            R_new = v.R.value(x)
            f1n, f2n = _sdr_f1_f2(W_new, R_new, channels, cfg)
            val = f1n - lam * f2n
            improved = val >= cur_val - 1e-12
            if improved:
                W_list, R, f1, f2 = W_new, R_new, f1n, f2n
            if deg or not improved or \
                    val - cur_val < opts.delta / 10 * (1 + abs(val)):
                cur_val = max(val, cur_val)
                break
            cur_val = val
        residual = f1 - lam * f2
        trace.append({"phase": "outer", "iter": it, "lambda": lam,
                      "objective": f1 / f2, "residual": residual,
                      "f1": f1, "f2": f2, "degraded": degraded})
        state.objective_history.append(f1 / f2)
        state.iteration = it
        if residual < opts.delta * (1 + abs(f1)):
            stop = "ratio-residual"
            break
        lam = f1 / f2
        if degraded and it >= 1:
            stop = "subproblem-accuracy-floor"
            break
    state.lam = lam
    state.stop_reason = stop
    return _finalize_extended(W_list, R, channels, cfg, trace, state)


def solve_ees_extended(cfg: SystemConfig, channels: ChannelSet,
                       opts: AlgorithmOptions | None = None):
    """Sensing-centric EE maximization for the extended target: descent on
    log(power term) + log(trace-inverse term) via tangent majorants."""
    opts = opts or AlgorithmOptions()
    trace = []
    W_list, R = _extended_init(cfg, channels, opts)
    state = OuterLoopState()

    def pq(W_list, R):
        rx = sum(W_list) + R
        p = cfg.sigma_s2 * cfg.M * _consumed(W_list, R, cfg)
        q = float(np.sum(1.0 / np.linalg.eigvalsh((rx + rx.conj().T) / 2)))
        return p, q

    p_prev, q_prev = pq(W_list, R)
    obj_cur = np.log(p_prev) + np.log(q_prev)
    stop = "max-outer"
    small = 0
    for it in range(opts.max_outer):
        m = SdpModel()
        v = _extended_vars(m, cfg)
        con.sinr_sdr(m, v, channels, cfg, include_probe=True)
        con.power_budget(m, v, cfg)
        con.extended_target_fragments(m, v, channels, cfg, mode="sense",
                                      p_prev=p_prev, q_prev=q_prev,
                                      crb_bound=cfg.rho)
        x, deg = _solve_step(m, opts, "extended sensing subproblem")
        W_new = [v.W[k].value(x) for k in range(cfg.K)]
        R_new = v.R.value(x)
        p_new, q_new = pq(W_new, R_new)
        obj_new = np.log(p_new) + np.log(q_new)
        if obj_new <= obj_cur + 1e-12:
            W_list, R = W_new, R_new
            p_prev, q_prev = p_new, q_new
        delta_obj = obj_cur - obj_new
        obj_cur = min(obj_cur, obj_new)
        trace.append({"phase": "outer", "iter": it, "objective": obj_cur,
                      "p": p_new, "q": q_new, "degraded": deg})
        state.objective_history.append(obj_cur)
        if abs(delta_obj) < opts.delta / 10 * (1 + abs(obj_cur)):
            small += 1
            if small >= 3:
                stop = "objective-stall"
                break
        else:
            small = 0
        if deg and it >= 1:
            stop = "subproblem-accuracy-floor"
            break
    state.stop_reason = stop
    return _finalize_extended(W_list, R, channels, cfg, trace, state)


# ---------------------------------------------------------------------------
# tradeoff sweep
# ---------------------------------------------------------------------------


def _threshold_base(cfg, channels, e_thresh):
    """Skeleton of the sensing-EE-constrained problem: power budget plus the
    variable-threshold Fisher block tied to the consumed power."""
    m = SdpModel()
    v = con.beamformer_vars(m, cfg, vectors=False)
    for Wk in v.W:
        m.psd(Wk)
    power = con.power_budget(m, v, cfg)
    consumed = power * (1.0 / cfg.eps_pa) + cfg.P0
    if e_thresh > 0:
        e_f = m.scalar(nonneg=True)
        con.crb_schur_lmi(m, v, channels, cfg, e_f + 0.0)
        kappa = cfg.sigma_s2 / (2.0 * abs(channels.alpha) ** 2)
        m.add_ineq(consumed * (e_thresh * kappa) - e_f)
    return m, v, power, consumed


def _pareto_start(cfg, channels, e_thresh, opts):
    """Feasible start for a threshold point: zero-forcing when it already
    meets the floor, otherwise the covariance maximizing the sensing margin
    (whose sign certifies whether the threshold is reachable at all)."""
    w0 = _rzf_start(cfg, channels)
    W_rzf = [np.outer(w, w.conj()) for w in w0]
    Wmat = np.column_stack(w0)
    crb = metrics.crb_point(Wmat, channels.theta, channels.alpha, cfg)
    ees = metrics.ee_sense(crb, Wmat, cfg) if np.isfinite(crb) else 0.0
    if ees >= e_thresh:
        return W_rzf
    m = SdpModel()
    v = con.beamformer_vars(m, cfg, vectors=False)
    for Wk in v.W:
        m.psd(Wk)
    power = con.power_budget(m, v, cfg)
    consumed = power * (1.0 / cfg.eps_pa) + cfg.P0
    kappa = cfg.sigma_s2 / (2.0 * abs(channels.alpha) ** 2)
    e_f = m.scalar()
    con.crb_schur_lmi(m, v, channels, cfg, e_f + 0.0)
    margin = e_f - consumed * (e_thresh * kappa)
    m.maximize(margin)
    x, _ = _solve_step(m, opts, "threshold margin maximization")
    if m.obj.value(x) < 0:
        raise InfeasibleScenario(
            f"sensing-efficiency floor {e_thresh:.4g} exceeds the achievable"
            " maximum", slack=-m.obj.value(x))
    return [v.W[k].value(x) for k in range(cfg.K)]


def _pareto_single(cfg, channels, e_thresh, opts):
    """One threshold-constrained EE maximization.

    Runs the same hypographed-surrogate ratio loop as the unconstrained EE
    design on top of the threshold skeleton; the per-iteration closed-form
    multipliers b_k (achieved SINR) and t_k (amplitude over total received
    power) are recorded in the trace.
    """
    trace = []
    W_list = _pareto_start(cfg, channels, e_thresh, opts)
    state = OuterLoopState()
    f1, f2 = _sdr_f1_f2(W_list, None, channels, cfg)
    lam = f1 / f2
    stop = "max-outer"
    degraded = False
    for it in range(opts.max_outer):
        cur_val = f1 - lam * f2
        for inner in range(max(opts.inner_max, 1)):
            sig, b_den, sinr = _sdr_quantities(W_list, None, channels, cfg)
            t = np.sqrt(sig) / b_den
            m, v, power, consumed = _threshold_base(cfg, channels, e_thresh)
            s_vars = _amplitude_vars(m, v, channels, cfg)
            obj = _rate_surrogate(m, v, s_vars, channels, cfg, t, sinr)
            m.maximize(obj - consumed * lam)
            x, deg = _solve_step(m, opts, "threshold subproblem")
            degraded = degraded or deg
            W_new = [v.W[k].value(x) for k in range(cfg.K)]
            f1n, f2n = _sdr_f1_f2(W_new, None, channels, cfg)
            val = f1n - lam * f2n
            improved = val >= cur_val - 1e-12
            if improved:
                W_list, f1, f2 = W_new, f1n, f2n
            state.b = sinr
            state.t = t
            if deg or not improved or \
                    val - cur_val < opts.delta / 10 * (1 + abs(val)):
                cur_val = max(val, cur_val)
                break
            cur_val = val
        residual = f1 - lam * f2
        trace.append({"phase": "outer", "iter": it, "lambda": lam,
                      "objective": f1 / f2, "residual": residual,
                      "f1": f1, "f2": f2, "degraded": degraded})
        state.objective_history.append(f1 / f2)
        if residual < opts.delta * (1 + abs(f1)):
            stop = "ratio-residual"
            break
        lam = f1 / f2
        if degraded and it >= 1:
            stop = "subproblem-accuracy-floor"
            break
    state.lam = lam
    state.stop_reason = stop
    return W_list, state, trace


def solve_pareto_point(cfg: SystemConfig, channels: ChannelSet,
                       E_grid, opts: AlgorithmOptions | None = None):
    """EE tradeoff sweep: maximize communication EE subject to a floor on the
    sensing EE, solved cold once per threshold; per-point infeasibility is
    recorded, not fatal.

    Returns a list of (threshold, achieved communication EE, solution) with
    solution None on infeasible thresholds.
    """
    opts = opts or AlgorithmOptions()
    if list(E_grid) != sorted(E_grid):
        raise ValueError("E_grid must be sorted ascending")
    out = []
    for e_thresh in E_grid:
        try:
            W_list, state, trace = _pareto_single(cfg, channels,
                                                  float(e_thresh), opts)
        except InfeasibleScenario:
            out.append((float(e_thresh), float("nan"), None))
            continue
        w_rec, _, rank_rep = recovery.recover_rank1(W_list, None, channels, cfg)
        sol = metrics.BeamformerSolution(W=np.column_stack(w_rec), trace=trace)
        rep = metrics.report(sol, channels, cfg)
        ees = rep.ee_s
        if ees < e_thresh * (1 - 1e-6) and e_thresh > 0:
            # recovery drifted below the floor; repair via the penalty pass
            try:
                w_rec = _pareto_polish(W_list, cfg, channels, e_thresh, opts,
                                       trace)
                sol = metrics.BeamformerSolution(W=np.column_stack(w_rec),
                                                 trace=trace)
                rep = metrics.report(sol, channels, cfg)
            except (SolverError, InfeasibleScenario):
                pass
        sol.achieved = {"ee_c": rep.ee_c, "ee_s": rep.ee_s,
                        "sum_rate": rep.sum_rate, "p_total": rep.P_total,
                        "crb": rep.crb, "lambda": state.lam,
                        "stop_reason": state.stop_reason,
                        "rank_path": rank_rep.path}
        out.append((float(e_thresh), rep.ee_c, sol))
    return out


def _pareto_polish(W_list, cfg, channels, e_thresh, opts, trace):
    """Penalty rank-one repair under the sensing-EE floor."""
    w_list = _rotate([recovery._projected_vector(W, channels.h[k])
                      for k, W in enumerate(W_list)], channels)
    p_bar = opts.penalty_p0 * 5.0
    for round_ in range(opts.penalty_rounds):
        Wl = [np.outer(w, w.conj()) for w in w_list]
        f1, f2 = _sdr_f1_f2(Wl, None, channels, cfg)
        m, v, power, consumed = _threshold_base(cfg, channels, e_thresh)
        # vector variables on top of the threshold skeleton
        v.w = [m.complex_vector(cfg.M) for _ in range(cfg.K)]
        slacks = []
        for k in range(cfg.K):
            sl = m.scalar(nonneg=True)
            con.rank1_lemma_constraints(m, v, k, w_list[k], slack=sl)
            slacks.append(sl)
        sig, b_den, sinr = _sdr_quantities(Wl, None, channels, cfg)
        t = np.sqrt(sig) / b_den
        s_vars = _amplitude_vars(m, v, channels, cfg)
        obj = _rate_surrogate(m, v, s_vars, channels, cfg, t, sinr)
        con.penalty_objective(m, obj - consumed * (f1 / f2), slacks, p_bar)
        x, _ = _solve_step(m, opts, "threshold polish")
        w_list = _rotate([v.w[k].value(x) for k in range(cfg.K)], channels)
        W = np.column_stack(w_list)
        crb = metrics.crb_point(W, channels.theta, channels.alpha, cfg)
        ees = metrics.ee_sense(crb, W, cfg) if np.isfinite(crb) else 0.0
        if ees >= e_thresh * (1 - 1e-9) and \
                metrics.transmit_power(W) <= cfg.Pmax * (1 + 1e-7):
            return w_list
        p_bar *= opts.penalty_mult
    raise SolverError("threshold polish failed")
