"""Rank-one beamformer extraction from lifted covariance solutions.

Two situations arise.  The point-target algorithms carry explicit vector
variables whose coupling constraints force each lifted W_k to be rank one at
every iterate, so extraction is a dominant-eigenvector read-off.  The
extended-target algorithms solve a pure rank relaxation; there the projection

    W_hat_k = W_k h_k h_k^H W_k / (h_k^H W_k h_k)

preserves each user's useful signal power exactly, W_k - W_hat_k stays PSD,
and shifting every residual into the probing covariance keeps the total
transmit covariance (hence interference terms and the sensing bound)
unchanged.  That realizes, without needing dual variables, the nullspace
construction used to prove that optimal rank-one solutions always exist.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .scenario import ChannelSet, SystemConfig


@dataclass
class RankReport:
    spectra: list                     # per-user eigenvalues, descending
    ranks: list                       # numeric ranks at ratio_tol
    path: str                         # already-rank-1 | closed-form | nullspace
    deltas: dict = field(default_factory=dict)
    nullspace_dims: list = field(default_factory=list)

    def __str__(self):
        lines = [f"rank-1 recovery via {self.path}; ranks {self.ranks}"]
        for k, v in self.deltas.items():
            lines.append(f"  {k}: {v:.3e}")
        return "\n".join(lines)


def numeric_rank(W: np.ndarray, ratio_tol: float = 1e-6) -> int:
    """Count of eigenvalues at least ratio_tol times the largest."""
    eig = np.linalg.eigvalsh((W + W.conj().T) / 2)[::-1]
    if eig[0] <= 0:
        return 0
    return int(np.sum(eig >= ratio_tol * eig[0]))


def _dominant_vector(W: np.ndarray, h: np.ndarray) -> np.ndarray:
    """sqrt(lambda_1) v_1 with the phase rotated so h^H w is real nonnegative."""
    eigval, eigvec = np.linalg.eigh((W + W.conj().T) / 2)
    w = np.sqrt(max(eigval[-1], 0.0)) * eigvec[:, -1]
    ip = h.conj() @ w
    if abs(ip) > 0:
        w = w * np.exp(-1j * np.angle(ip))
    return w


def _projected_vector(W: np.ndarray, h: np.ndarray) -> np.ndarray:
    """w with w w^H = W h h^H W / (h^H W h); preserves h^H W h exactly."""
    num = float(np.real(h.conj() @ W @ h))
    if num <= 1e-12 * max(np.real(np.trace(W)), 1e-300):
        raise ValueError("degenerate beamformer: h^H W h is numerically zero")
    return (W @ h) / np.sqrt(num)


def recover_rank1(W_set, Rprobe, channels: ChannelSet, cfg: SystemConfig,
                  ratio_tol: float = 1e-6, invariant_tol: float = 1e-8):
    """Extract per-user vectors (and an updated probing covariance) from the
    lifted solution; verifies the preservation invariants and attaches the
    diagnostics to the report.

    Returns (w_list, Rprobe_new, RankReport).
    """
    k_users = len(W_set)
    spectra = [np.linalg.eigvalsh((W + W.conj().T) / 2)[::-1] for W in W_set]
    ranks = [numeric_rank(W, ratio_tol) for W in W_set]
    total_before = sum(W_set) + (Rprobe if Rprobe is not None else 0.0)

    if Rprobe is None:
        # point-target path: coupling constraints already did the work
        if all(r <= 1 for r in ranks):
            path = "already-rank-1"
            w_list = [_dominant_vector(W, channels.h[k])
                      for k, W in enumerate(W_set)]
        else:
            path = "closed-form"
            w_list = [_projected_vector(W, channels.h[k])
                      for k, W in enumerate(W_set)]
        r_new = None
        total_after = sum(np.outer(w, w.conj()) for w in w_list)
    else:
        path = "closed-form" if k_users == 1 else "nullspace"
        w_list = []
        r_new = np.array(Rprobe, dtype=complex, copy=True)
        for k, W in enumerate(W_set):
            w = _projected_vector(W, channels.h[k])
            w = w * np.exp(-1j * np.angle(channels.h[k].conj() @ w))
            residual = W - np.outer(w, w.conj())
            min_eig = np.linalg.eigvalsh((residual + residual.conj().T) / 2)[0]
            if min_eig < -1e-9 * max(np.real(np.trace(W)), 1.0):
                raise ValueError(
                    f"projection residual for user {k} lost positive "
                    f"semidefiniteness (min eig {min_eig:.2e}); spectra: "
                    f"{[s.tolist() for s in spectra]}")
            r_new = r_new + residual
            w_list.append(w)
        total_after = sum(np.outer(w, w.conj()) for w in w_list) + r_new

    deltas = {}
    num_delta = 0.0
    intf_delta = 0.0
    for k in range(k_users):
        h = channels.h[k]
        before = float(np.real(h.conj() @ W_set[k] @ h))
        after = abs(h.conj() @ w_list[k]) ** 2
        num_delta = max(num_delta, abs(before - after) / max(before, 1e-12))
        oth_before = float(np.real(h.conj() @ (total_before - W_set[k]) @ h)) \
            if np.ndim(total_before) else 0.0
        oth_after = float(np.real(
            h.conj() @ (total_after - np.outer(w_list[k], w_list[k].conj())) @ h))
        intf_delta = max(intf_delta,
                         abs(oth_before - oth_after) / max(oth_before, 1e-12))
    deltas["sinr_numerator_rel"] = num_delta
    deltas["interference_rel"] = intf_delta
    if np.ndim(total_before):
        deltas["total_cov_fro"] = float(
            np.linalg.norm(total_after - total_before) /
            max(np.linalg.norm(total_before), 1e-12))
    pow_before = float(np.real(np.trace(total_before))) if np.ndim(total_before) \
        else 0.0
    pow_after = float(np.real(np.trace(total_after)))
    deltas["power_rel"] = (pow_after - pow_before) / max(pow_before, 1e-12)

    nullspace_dims = []
    for k, W in enumerate(W_set):
        vec, val = np.linalg.eigh((W + W.conj().T) / 2)[1], spectra[k]
        sig = vec[:, ::-1][:, :max(ranks[k], 1)]
        ortho = np.abs(channels.h[k].conj() @ sig) < 1e-8 * np.linalg.norm(
            channels.h[k])
        nullspace_dims.append(int(np.sum(ortho)))

    report = RankReport(spectra=spectra, ranks=ranks, path=path,
                        deltas=deltas, nullspace_dims=nullspace_dims)
    if Rprobe is not None and deltas["total_cov_fro"] > invariant_tol:
        raise ValueError(f"total covariance moved during recovery: {report}")
    return w_list, r_new, report
