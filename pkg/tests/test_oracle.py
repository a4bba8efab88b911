import numpy as np
import pytest

from eeisac import metrics, oracle
from eeisac.scenario import default_config, draw_channels


def test_fisher_single_antenna_zero():
    cfg = default_config(M=1, N_rx=2, K=1, gamma=1.0)
    assert oracle.fisher_fd(np.eye(1), 1.0, 1.0, cfg) == 0.0


def test_fisher_closed_form_cross_check():
    # M=2, Rx=I, theta=pi/2 with exact derivatives gives J = 2L|a|^2 * 3 pi^2
    cfg = default_config(M=2, N_rx=4, K=1, L=1, sigma_s2=1.0, gamma=1.0)
    j = oracle.fisher_fd(np.eye(2), np.pi / 2, 1.0, cfg)
    assert j == pytest.approx(6.0 * np.pi ** 2, rel=1e-6)


def test_fisher_alpha_quadratic():
    cfg = default_config(M=3, K=1, gamma=1.0)
    rx = np.diag([1.0, 2.0, 0.5])
    j1 = oracle.fisher_fd(rx, 1.0, 1.0, cfg)
    j2 = oracle.fisher_fd(rx, 1.0, 2.0, cfg)
    assert j2 == pytest.approx(4.0 * j1, rel=1e-12)


def test_fisher_richardson_stability():
    cfg = default_config(M=4, K=1, gamma=1.0)
    rx = np.eye(4) + 0.1
    base = oracle.fisher_fd(rx, 0.9, 1.0, cfg,
                            oracle.OracleConfig(fd_step=1e-6))
    halved = oracle.fisher_fd(rx, 0.9, 1.0, cfg,
                              oracle.OracleConfig(fd_step=5e-7))
    assert halved == pytest.approx(base, rel=1e-3)


def test_oracle_config_bounds():
    with pytest.raises(ValueError):
        oracle.OracleConfig(fd_step=1e-2)


class TestGridSearch:
    def test_requires_single_user(self):
        cfg = default_config(M=4, K=2)
        ch = draw_channels(cfg)
        with pytest.raises(ValueError):
            oracle.grid_search_ee(cfg, ch)

    def test_boundary_when_power_tiny(self):
        # with a tiny budget EE is increasing in p, so the best sits at Pmax
        cfg = default_config(M=4, K=1, gamma=1.0, Pmax=1e-3)
        ch = draw_channels(cfg)
        p, _ = oracle.grid_search_ee(cfg, ch, resolution=2000)
        assert p == pytest.approx(cfg.Pmax, rel=1e-3)

    def test_grid_near_continuous_optimum(self):
        cfg = default_config(M=4, K=1, gamma=1.0, rng_seed=5)
        ch = draw_channels(cfg)
        g = float(np.real(ch.h[0].conj() @ ch.h[0]))

        def ee(p):
            return np.log2(1 + p * g / cfg.sigma_c2) / (p / cfg.eps_pa + cfg.P0)

        p_star, ee_star = oracle.grid_search_ee(cfg, ch, resolution=10_000)
        # refine by local scan
        fine = np.linspace(max(p_star - 2e-4, 1e-9), p_star + 2e-4, 4001)
        assert ee_star >= np.max(ee(fine)) - 1e-6 * ee_star


class TestAudit:
    def test_zero_beamformer_violation_equals_gamma(self):
        cfg = default_config(M=4, K=2, gamma=10.0, rng_seed=1)
        ch = draw_channels(cfg)
        sol = metrics.BeamformerSolution(W=np.zeros((4, 2), dtype=complex))
        rep = oracle.audit_solution(sol, cfg, ch, crb_bound=np.inf)
        assert not rep.ok
        # relative SINR violation of an all-zero beamformer is exactly 1
        assert rep.details["sinr_0"] == pytest.approx(1.0)

    def test_constructed_violation_measured(self):
        cfg = default_config(M=2, K=1, gamma=1.0, Pmax=1.0, sigma_c2=1.0)
        ch = draw_channels(cfg)
        h0 = np.array([[1.0, 0.0]], dtype=complex)
        ch = type(ch)(h=h0, theta=ch.theta, alpha=ch.alpha)
        w = np.array([[np.sqrt(0.5)], [0.0]], dtype=complex)   # SINR = 0.5
        sol = metrics.BeamformerSolution(W=w)
        rep = oracle.audit_solution(sol, cfg, ch, crb_bound=np.inf)
        assert rep.details["sinr_0"] == pytest.approx(0.5, abs=1e-10)

    def test_feasible_passes(self):
        cfg = default_config(M=2, K=1, gamma=0.25, Pmax=1.0, sigma_c2=1.0)
        ch = draw_channels(cfg)
        h0 = np.array([[1.0, 0.0]], dtype=complex)
        ch = type(ch)(h=h0, theta=ch.theta, alpha=ch.alpha)
        w = np.array([[np.sqrt(0.5)], [0.0]], dtype=complex)
        sol = metrics.BeamformerSolution(W=w)
        rep = oracle.audit_solution(sol, cfg, ch, crb_bound=np.inf)
        assert rep.ok
