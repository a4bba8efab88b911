import numpy as np
import pytest

from eeisac import constraints as con
from eeisac import metrics
from eeisac.scenario import default_config, draw_channels
from eeisac.sdp_core import LinExpr, SdpModel


def make_instance(seed=0, M=4, K=2, **kw):
    cfg = default_config(M=M, N_rx=2 * M, K=K, rng_seed=seed, **kw)
    ch = draw_channels(cfg)
    return cfg, ch


def random_psd(rng, m, scale=0.1):
    a = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    return scale * (a @ a.conj().T) / m


class TestCrbSchurLmi:
    def eval_lmi(self, cfg, ch, rx, bound):
        m = SdpModel()
        v = con.beamformer_vars(m, cfg.with_(K=1, gamma=cfg.gamma[:1]), vectors=False)
        handle, _ = con.crb_schur_lmi(m, v, ch, cfg, bound)
        x = v.assign([rx])
        return m.lmi_matrix(handle, x)

    def test_holds_at_half_bound(self):
        cfg, ch = make_instance(seed=1)
        rng = np.random.default_rng(2)
        rx = random_psd(rng, cfg.M, scale=0.3)
        crb = metrics.crb_point_from_cov(rx, ch.theta, ch.alpha, cfg)
        mat = self.eval_lmi(cfg, ch, rx, bound=2.0 * crb)   # CRB == bound/2
        assert np.linalg.eigvalsh(mat)[0] >= -1e-9

    def test_violated_at_double_crb(self):
        cfg, ch = make_instance(seed=3)
        rng = np.random.default_rng(4)
        rx = random_psd(rng, cfg.M, scale=0.3)
        crb = metrics.crb_point_from_cov(rx, ch.theta, ch.alpha, cfg)
        mat = self.eval_lmi(cfg, ch, rx, bound=0.5 * crb)   # CRB == 2 * bound
        assert np.linalg.eigvalsh(mat)[0] < -1e-12

    def test_feasibility_iff_crb_within_bound(self):
        # both directions on random covariances, margin 1e-8
        rng = np.random.default_rng(5)
        cfg, ch = make_instance(seed=5)
        for _ in range(20):
            rx = random_psd(rng, cfg.M, scale=rng.uniform(0.05, 1.0))
            crb = metrics.crb_point_from_cov(rx, ch.theta, ch.alpha, cfg)
            for fac in (0.9, 1.1):
                mat = self.eval_lmi(cfg, ch, rx, bound=fac * crb)
                feas = np.linalg.eigvalsh(mat)[0] >= -1e-9 * np.abs(mat).max()
                assert feas == (crb <= fac * crb * (1 + 1e-8)
                                if fac >= 1.0 else crb <= fac * crb + 1e-8) \
                    or abs(fac - 1.0) < 1e-12
                # fac > 1: bound looser than achieved -> feasible
                # fac < 1: bound tighter -> infeasible
                assert feas == (fac >= 1.0)

    def test_infinite_bound_skipped(self):
        cfg, ch = make_instance(seed=6)
        m = SdpModel()
        v = con.beamformer_vars(m, cfg.with_(K=1, gamma=cfg.gamma[:1]), vectors=False)
        handle, const = con.crb_schur_lmi(m, v, ch, cfg, np.inf)
        assert handle is None and const == 0.0 and len(m.lmis) == 0


class TestSinrSdr:
    def test_mrt_boundary_equality(self):
        cfg, ch = make_instance(seed=7, K=1)
        h = ch.h[0]
        g = float(np.real(h.conj() @ h))
        p = 0.5
        gamma_star = p * g / cfg.sigma_c2
        cfg = cfg.with_(gamma=(gamma_star,))
        w = np.sqrt(p) * h / np.sqrt(g)
        m = SdpModel()
        v = con.beamformer_vars(m, cfg, vectors=False)
        rows = con.sinr_sdr(m, v, ch, cfg)
        x = v.assign([np.outer(w, w.conj())])
        assert rows[0].value(x) == pytest.approx(0.0, abs=1e-9)

    def test_zero_threshold_trivial(self):
        cfg, ch = make_instance(seed=8, K=2, gamma=1e-9)
        m = SdpModel()
        v = con.beamformer_vars(m, cfg, vectors=False)
        rows = con.sinr_sdr(m, v, ch, cfg)
        x = v.assign([np.zeros((4, 4), complex)] * 2)
        for r in rows:
            assert r.value(x) >= -1e-8      # W = 0 nearly feasible as gamma -> 0

    def test_matches_metric_sinr(self):
        cfg, ch = make_instance(seed=9, K=2, gamma=2.0)
        rng = np.random.default_rng(10)
        m = SdpModel()
        v = con.beamformer_vars(m, cfg, vectors=False)
        rows = con.sinr_sdr(m, v, ch, cfg)
        W = rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2))
        W *= 0.4
        x = v.assign([np.outer(W[:, k], W[:, k].conj()) for k in range(2)])
        for k in range(2):
            sinr = metrics.sinr_k(W, ch.h[k], k, cfg.sigma_c2)
            row_ok = rows[k].value(x) >= -1e-8
            assert row_ok == (sinr >= cfg.gamma[k] - 1e-7)

    def test_probe_term(self):
        cfg, ch = make_instance(seed=11, K=1, gamma=1.0)
        m = SdpModel()
        v = con.beamformer_vars(m, cfg, vectors=False, probe=True)
        rows = con.sinr_sdr(m, v, ch, cfg, include_probe=True)
        h = ch.h[0]
        w = h / np.linalg.norm(h)
        rp = 0.3 * np.eye(cfg.M, dtype=complex)
        x = v.assign([np.outer(w, w.conj())], R_val=rp)
        sinr = metrics.sinr_k(w[:, None], h, 0, cfg.sigma_c2, rp)
        expect = cfg.gamma[0] * (sinr / cfg.gamma[0] - 1.0) * \
            (cfg.sigma_c2 + 0.3 * np.real(h.conj() @ h))
        assert rows[0].value(x) == pytest.approx(expect, rel=1e-9)


class TestRank1Lemma:
    def test_cut_tight_at_expansion(self):
        cfg, ch = make_instance(seed=12, K=1)
        rng = np.random.default_rng(13)
        w = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        m = SdpModel()
        v = con.beamformer_vars(m, cfg)
        frags = con.rank1_lemma_constraints(m, v, 0, w)
        x = v.assign([np.outer(w, w.conj())], w_vals=[w])
        assert frags["cut"].value(x) == pytest.approx(0.0, abs=1e-10)
        assert np.linalg.eigvalsh(m.lmi_matrix(frags["lifted"], x))[0] >= -1e-10

    def test_cut_detects_rank_excess(self):
        cfg, ch = make_instance(seed=14, K=1)
        rng = np.random.default_rng(15)
        w = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        eps = 0.01
        m = SdpModel()
        v = con.beamformer_vars(m, cfg)
        frags = con.rank1_lemma_constraints(m, v, 0, w)
        x = v.assign([np.outer(w, w.conj()) + eps * np.eye(4)], w_vals=[w])
        assert frags["cut"].value(x) == pytest.approx(eps * 4, rel=1e-9)

    def test_cut_plus_lift_forces_rank_one(self):
        # any (W, w) satisfying the lifted block and the cut has W == w w^H
        rng = np.random.default_rng(16)
        for _ in range(20):
            w = rng.standard_normal(3) + 1j * rng.standard_normal(3)
            wbar = w + 0.01 * (rng.standard_normal(3) + 1j * rng.standard_normal(3))
            # W >= w w^H with tr(W) <= 2 Re(wbar^H w) - |wbar|^2 <= |w|^2
            lift_ok_W = np.outer(w, w.conj())
            cut_rhs = 2 * np.real(wbar.conj() @ w) - np.real(wbar.conj() @ wbar)
            tr_w = np.real(np.trace(lift_ok_W))
            if tr_w <= cut_rhs + 1e-12:
                excess = lift_ok_W - np.outer(w, w.conj())
                assert np.trace(excess).real <= 1e-9

    def test_cut_is_global_overestimator_of_trace_gap(self):
        # cut(w, W) - (tr W - w^H w) = |w - wbar|^2 >= 0
        rng = np.random.default_rng(17)
        cfg, _ = make_instance(seed=17, K=1)
        wbar = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        m = SdpModel()
        v = con.beamformer_vars(m, cfg)
        frags = con.rank1_lemma_constraints(m, v, 0, wbar)
        worst = np.inf
        for _ in range(200):
            w = rng.standard_normal(4) + 1j * rng.standard_normal(4)
            W = np.outer(w, w.conj()) + random_psd(rng, 4, 0.1)
            x = v.assign([W], w_vals=[w])
            gap = frags["cut"].value(x) - \
                (np.trace(W).real - np.real(w.conj() @ w))
            worst = min(worst, gap)
        assert worst >= -1e-12


class TestQuadTransform:
    def test_zero_multiplier_objective(self):
        cfg, ch = make_instance(seed=18, K=2)
        m = SdpModel()
        v = con.beamformer_vars(m, cfg)
        lam = 0.7
        parts = con.quad_transform_objective(
            m, v, ch, np.zeros(2), lam, cfg, u_prev=np.ones(2))
        W = [np.zeros((4, 4), complex)] * 2
        x = v.assign(W, w_vals=[np.zeros(4, complex)] * 2)
        # u_k = 0, so best z is log2(1) = 0 and objective = -lam * P0
        assert parts["u"][0].value(x) == pytest.approx(0.0, abs=1e-12)
        assert m.obj.value(x) + lam * cfg.P0 == pytest.approx(
            x[parts["z"][0].idx] + x[parts["z"][1].idx], abs=1e-12)

    def test_optimal_t_recovers_sinr(self):
        cfg, ch = make_instance(seed=19, K=2, gamma=2.0)
        rng = np.random.default_rng(20)
        W = 0.5 * (rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2)))
        # rotate columns so h_k^H w_k is real positive
        for k in range(2):
            ph = np.angle(ch.h[k].conj() @ W[:, k])
            W[:, k] *= np.exp(-1j * ph)
        t = np.zeros(2)
        for k in range(2):
            b_k = cfg.sigma_c2 + sum(
                abs(ch.h[k].conj() @ W[:, j]) ** 2 for j in range(2) if j != k)
            t[k] = abs(ch.h[k].conj() @ W[:, k]) / b_k
        m = SdpModel()
        v = con.beamformer_vars(m, cfg)
        parts = con.quad_transform_objective(m, v, ch, t, 0.0, cfg,
                                             u_prev=np.ones(2))
        x = v.assign([np.outer(W[:, k], W[:, k].conj()) for k in range(2)],
                     w_vals=[W[:, 0], W[:, 1]])
        for k in range(2):
            sinr = metrics.sinr_k(W, ch.h[k], k, cfg.sigma_c2)
            assert parts["u"][k].value(x) == pytest.approx(sinr, rel=1e-12)


class TestChords:
    def sample_hypograph(self, fn, knots, lo, hi, n=10_000):
        """max feasible z at sampled u, versus fn(u)."""
        m = SdpModel()
        z = m.scalar()
        u = m.scalar()
        con.concave_chords(m, z, u, fn, knots)
        rows = [(e.coef.get(z.idx, 0.0), e.coef.get(u.idx, 0.0), e.const)
                for e in m.ineqs]
        rng = np.random.default_rng(21)
        us = rng.uniform(lo, hi, n)
        worst = np.inf
        for uv in us:
            zmax = min((-c - b * uv) / a for a, b, c in rows if a > 0)
            worst = min(worst, fn(uv) - zmax)
        return worst

    def test_log2_chords_underestimate(self):
        knots = con._knot_ladder(3.0, 0.0)
        worst = self.sample_hypograph(lambda v: np.log2(1 + v), knots,
                                      0.0, knots[-1] * 3)
        assert worst >= -1e-12

    def test_log2_chords_tight_at_center(self):
        center = 2.5
        knots = con._knot_ladder(center, 0.0)
        m = SdpModel()
        z = m.scalar()
        u = m.scalar()
        con.concave_chords(m, z, u, lambda v: np.log2(1 + v), knots)
        rows = [(e.coef.get(z.idx, 0.0), e.coef.get(u.idx, 0.0), e.const)
                for e in m.ineqs]
        zmax = min((-c - b * center) / a for a, b, c in rows if a > 0)
        assert zmax == pytest.approx(np.log2(1 + center), abs=1e-12)

    def test_ln_chords_respect_lower_bound(self):
        knots = con._knot_ladder(1.5, 0.01)
        worst = self.sample_hypograph(np.log, knots, 0.01, knots[-1] * 2)
        assert worst >= -1e-12


class TestSensingChainCuts:
    def test_quotient_cut_tight_and_under(self):
        # 2 (z0/p0) z - (z0/p0)^2 p <= z^2 / p for all p > 0
        rng = np.random.default_rng(22)
        for _ in range(50):
            z0, p0 = rng.uniform(0.1, 5.0, 2)
            zs = rng.uniform(-2, 6, 200)
            ps = rng.uniform(1e-3, 8, 200)
            r = z0 / p0
            cut = 2 * r * zs - r ** 2 * ps
            true = zs ** 2 / ps
            assert np.all(cut <= true + 1e-12)
            assert 2 * r * z0 - r ** 2 * p0 == pytest.approx(z0 ** 2 / p0,
                                                             rel=1e-12)

    def test_fragments_tight_at_linearization(self):
        cfg, ch = make_instance(seed=23, K=2, gamma=1.0)
        rng = np.random.default_rng(24)
        W = 0.4 * (rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2)))
        scal = {"phi": 2.0, "zeta": 1.0}
        for k in range(2):
            scal[f"tau_{k}"] = float(abs(ch.h[k].conj() @ W[:, k]))
            scal[f"psi_{k}"] = cfg.sigma_c2 + sum(
                abs(ch.h[k].conj() @ W[:, j]) ** 2 for j in range(2) if j != k)
        lin = con.LinearizationPoint(w_prev=[], scalars_prev=scal)
        m = SdpModel()
        v = con.beamformer_vars(m, cfg, vectors=False)
        chain = con.epigraph_sensing_point(m, v, ch, cfg, lin)
        # at the linearization point with omega = zeta^2/phi the cut is tight
        extra = {chain["zeta"].idx: scal["zeta"], chain["phi"].idx: scal["phi"],
                 chain["omega"].idx: scal["zeta"] ** 2 / scal["phi"]}
        x = v.assign([np.outer(W[:, k], W[:, k].conj()) for k in range(2)],
                     extra=extra)
        assert chain["omega_cut"].value(x) == pytest.approx(0.0, abs=1e-12)
        # SINR cut at the linearization point reduces to gamma <= sinr_prev
        for k in range(2):
            extra2 = dict(extra)
            extra2[chain["tau"][k].idx] = scal[f"tau_{k}"]
            extra2[chain["psi"][k].idx] = scal[f"psi_{k}"]
            x2 = v.assign([np.outer(W[:, j], W[:, j].conj()) for j in range(2)],
                          extra=extra2)
            sinr_prev = scal[f"tau_{k}"] ** 2 / scal[f"psi_{k}"]
            assert chain["sinr_cuts"][k].value(x2) == pytest.approx(
                cfg.gamma[k] - sinr_prev, rel=1e-9, abs=1e-12)

    def test_validation_rejects_bad_scalars(self):
        cfg, ch = make_instance(seed=25, K=1)
        lin = con.LinearizationPoint(w_prev=[],
                                     scalars_prev={"phi": 0.0, "zeta": 1.0,
                                                   "tau_0": 1.0, "psi_0": 1.0})
        m = SdpModel()
        v = con.beamformer_vars(m, cfg, vectors=False)
        with pytest.raises(ValueError):
            con.epigraph_sensing_point(m, v, ch, cfg, lin)


class TestExtendedFragments:
    def test_trace_inverse_tight_at_identity(self):
        cfg, ch = make_instance(seed=26, K=1)
        m = SdpModel()
        v = con.beamformer_vars(m, cfg, vectors=False, probe=True)
        y, tr_y, handle = con.trace_inverse_epigraph(m, v, cfg)
        x = v.assign([np.zeros((4, 4), complex)], R_val=np.eye(4, dtype=complex),
                     extra=y.pack(np.eye(4, dtype=complex)))
        mat = m.lmi_matrix(handle, x)
        assert np.linalg.eigvalsh(mat)[0] >= -1e-10
        assert tr_y.value(x) == pytest.approx(4.0)

    def test_b_identity_recovers_rate(self):
        # log2(v) + log2(b) + (1 - a b)/ln2 at b = 1/a equals log2(v/a)
        rng = np.random.default_rng(27)
        for _ in range(50):
            a = rng.uniform(0.1, 4.0)
            v = a + rng.uniform(0.1, 9.0)
            b = 1.0 / a
            val = np.log2(v) + np.log2(b) + (1 - a * b) / con.LN2
            assert val == pytest.approx(np.log2(v / a), rel=1e-10)

    def test_b_term_is_minorant(self):
        rng = np.random.default_rng(28)
        for _ in range(200):
            a0 = rng.uniform(0.1, 4.0)
            b = 1.0 / a0
            a = rng.uniform(0.05, 8.0)
            assert np.log2(b) + (1 - a * b) / con.LN2 <= -np.log2(a) + 1e-12

    def test_sense_mode_epigraphs(self):
        cfg, ch = make_instance(seed=29, K=1, gamma=0.5)
        m = SdpModel()
        v = con.beamformer_vars(m, cfg, vectors=False, probe=True)
        parts = con.extended_target_fragments(m, v, ch, cfg, mode="sense",
                                              p_prev=1.0, q_prev=1.0)
        assert "p_e" in parts and "q_e" in parts
        # ineqs include p-epigraph, q-epigraph
        assert len(m.ineqs) >= 2
