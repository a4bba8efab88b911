import numpy as np
import pytest

from eeisac import recovery
from eeisac.scenario import default_config, draw_channels


def rand_psd(rng, m, scale=1.0):
    a = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    return scale * (a @ a.conj().T) / m


class TestNumericRank:
    def test_identity(self):
        assert recovery.numeric_rank(np.eye(3), 1e-6) == 3

    def test_rank_one(self):
        w = np.array([1.0, 2.0j, -0.5])
        assert recovery.numeric_rank(np.outer(w, w.conj()), 1e-6) == 1

    def test_small_perturbation_below_threshold(self):
        w = np.array([1.0, 2.0j, -0.5])
        W = np.outer(w, w.conj()) + 1e-9 * np.eye(3)
        assert recovery.numeric_rank(W, 1e-6) == 1


class TestPointPath:
    def test_exact_rank_one_passthrough(self):
        cfg = default_config(M=4, K=2, rng_seed=0, gamma=1.0)
        ch = draw_channels(cfg)
        rng = np.random.default_rng(1)
        ws = [rng.standard_normal(4) + 1j * rng.standard_normal(4)
              for _ in range(2)]
        W_set = [np.outer(w, w.conj()) for w in ws]
        w_rec, r_new, rep = recovery.recover_rank1(W_set, None, ch, cfg)
        assert rep.path == "already-rank-1"
        assert r_new is None
        for k in range(2):
            np.testing.assert_allclose(np.outer(w_rec[k], w_rec[k].conj()),
                                       W_set[k], atol=1e-10)
        assert rep.deltas["sinr_numerator_rel"] <= 1e-10


class TestClosedForm:
    def test_identity_covariance_single_user(self):
        # W = I, h = e1: projection keeps h^H W h = 1
        cfg = default_config(M=3, K=1, rng_seed=0, gamma=1.0)
        ch = draw_channels(cfg)
        h = np.zeros(3, dtype=complex)
        h[0] = 1.0
        ch = type(ch)(h=h[None, :], theta=ch.theta, alpha=ch.alpha)
        W = np.eye(3, dtype=complex)
        R0 = np.zeros((3, 3), dtype=complex)
        w_rec, r_new, rep = recovery.recover_rank1([W], R0, ch, cfg)
        np.testing.assert_allclose(np.outer(w_rec[0], w_rec[0].conj()),
                                   np.diag([1.0, 0, 0]), atol=1e-12)
        assert abs(h.conj() @ w_rec[0]) ** 2 == pytest.approx(1.0, rel=1e-12)
        # residual moved into the probing covariance keeps the total
        np.testing.assert_allclose(np.outer(w_rec[0], w_rec[0].conj()) + r_new,
                                   W + R0, atol=1e-12)

    def test_projection_residual_psd(self):
        rng = np.random.default_rng(2)
        cfg = default_config(M=4, K=1, rng_seed=0, gamma=1.0)
        ch = draw_channels(cfg)
        for _ in range(20):
            W = rand_psd(rng, 4)
            h = ch.h[0]
            num = float(np.real(h.conj() @ W @ h))
            w = (W @ h) / np.sqrt(num)
            resid = W - np.outer(w, w.conj())
            assert np.linalg.eigvalsh((resid + resid.conj().T) / 2)[0] >= -1e-9

    def test_degenerate_rejected(self):
        cfg = default_config(M=3, K=1, rng_seed=0, gamma=1.0)
        ch = draw_channels(cfg)
        h = np.array([1.0, 0, 0], dtype=complex)
        ch = type(ch)(h=h[None, :], theta=ch.theta, alpha=ch.alpha)
        W = np.diag([0.0, 1.0, 1.0]).astype(complex)   # h^H W h = 0
        with pytest.raises(ValueError, match="degenerate"):
            recovery.recover_rank1([W], np.zeros((3, 3), complex), ch, cfg)


class TestExtendedInvariants:
    def test_random_sdr_outputs(self):
        rng = np.random.default_rng(3)
        cfg = default_config(M=4, K=2, rng_seed=5, gamma=1.0)
        ch = draw_channels(cfg)
        for _ in range(20):
            W_set = [rand_psd(rng, 4, 0.3) for _ in range(2)]
            R = rand_psd(rng, 4, 0.2)
            total_before = sum(W_set) + R
            w_rec, r_new, rep = recovery.recover_rank1(W_set, R, ch, cfg)
            assert rep.path == "nullspace"
            total_after = sum(np.outer(w, w.conj()) for w in w_rec) + r_new
            # total covariance preserved
            assert np.linalg.norm(total_after - total_before) <= \
                1e-8 * np.linalg.norm(total_before)
            for k in range(2):
                h = ch.h[k]
                before = float(np.real(h.conj() @ W_set[k] @ h))
                after = abs(h.conj() @ w_rec[k]) ** 2
                assert after == pytest.approx(before, rel=1e-8)
                oth_b = float(np.real(
                    h.conj() @ (total_before - W_set[k]) @ h))
                oth_a = float(np.real(h.conj() @ (
                    total_after - np.outer(w_rec[k], w_rec[k].conj())) @ h))
                assert oth_a == pytest.approx(oth_b, rel=1e-8)
            # probing covariance stays PSD
            assert np.linalg.eigvalsh((r_new + r_new.conj().T) / 2)[0] >= -1e-9
