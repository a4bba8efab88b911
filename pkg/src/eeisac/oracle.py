"""Independent brute-force verifiers used by the tests and the acceptance gate.

The numeric oracles here deliberately share no code with the primary
computation paths: array responses are rebuilt from scratch, derivatives come
from central differences, and scalar quantities are accumulated in plain
Python loops.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from . import metrics
from .scenario import ChannelSet, SystemConfig


@dataclass(frozen=True)
class OracleConfig:
    fd_step: float = 1e-6           # radians
    grid_resolution: int = 10_000
    sample_count: int = 10_000
    tolerances: dict = field(default_factory=lambda: {
        "fisher_rel": 1e-4,
        "richardson_rel": 1e-3,
        "audit": 1e-6,
    })

    def __post_init__(self):
        if not (1e-8 <= self.fd_step <= 1e-3):
            raise ValueError("fd_step out of the supported range [1e-8, 1e-3]")


def _response(theta: float, n: int) -> list[complex]:
    # independent of eeisac.steering on purpose
    return [cmath.exp(-1j * math.pi * m * math.cos(theta)) for m in range(n)]


def _quad(u: list[complex], rt: np.ndarray, v: list[complex]) -> complex:
    n = len(u)
    acc = 0.0 + 0.0j
    for i in range(n):
        for j in range(n):
            acc += u[i].conjugate() * rt[i, j] * v[j]
    return acc


def _fisher_at_step(Rx: np.ndarray, theta: float, alpha: complex,
                    cfg: SystemConfig, h: float) -> float:
    n = Rx.shape[0]
    rt = np.asarray(Rx).T
    a = _response(theta, n)
    ap = _response(theta + h, n)
    am = _response(theta - h, n)
    da = [(p - m) / (2.0 * h) for p, m in zip(ap, am)]
    g = _quad(a, rt, a).real
    if g <= 0:
        return 0.0
    dd = _quad(da, rt, da).real
    s = _quad(a, rt, da)
    nd2 = sum(abs(x) ** 2 for x in da)
    f = n * dd + g * nd2 - n * abs(s) ** 2 / g
    return 2.0 * cfg.L * abs(alpha) ** 2 * f / cfg.sigma_s2


def fisher_fd(Rx: np.ndarray, theta: float, alpha: complex, cfg: SystemConfig,
              ocfg: OracleConfig | None = None) -> float:
    """Fisher information (1/rad^2) of the angle estimate via central differences.

    Evaluates the Schur-reduced quadratic-form bundle with finite-difference
    array derivatives; a Richardson step-halving check guards the step size.
    """
    ocfg = ocfg or OracleConfig()
    j1 = _fisher_at_step(Rx, theta, alpha, cfg, ocfg.fd_step)
    j2 = _fisher_at_step(Rx, theta, alpha, cfg, ocfg.fd_step / 2.0)
    if j1 == 0.0 and j2 == 0.0:
        return 0.0
    rel = abs(j1 - j2) / max(abs(j2), 1e-300)
    if rel > ocfg.tolerances["richardson_rel"]:
        raise ArithmeticError(
            f"finite-difference step unstable: Richardson disagreement {rel:.2e}")
    return j2


def sinr_scalar(W: np.ndarray, h_k: np.ndarray, k: int, sigma_c2: float,
                Rprobe: np.ndarray | None = None) -> float:
    """Scalar-loop SINR recomputation (no vectorized linear algebra)."""
    m, n_users = W.shape
    sig = 0.0 + 0.0j
    for i in range(m):
        sig += h_k[i].conjugate() * W[i, k]
    num = abs(sig) ** 2
    den = sigma_c2
    for j in range(n_users):
        if j == k:
            continue
        acc = 0.0 + 0.0j
        for i in range(m):
            acc += h_k[i].conjugate() * W[i, j]
        den += abs(acc) ** 2
    if Rprobe is not None:
        acc = 0.0 + 0.0j
        for i in range(m):
            for j in range(m):
                acc += h_k[i].conjugate() * Rprobe[i, j] * h_k[j]
        den += acc.real
    return num / den


def ee_comm_scalar(W: np.ndarray, channels: ChannelSet, cfg: SystemConfig,
                   Rprobe: np.ndarray | None = None) -> float:
    """Rate/power recomputation for EE cross-checks."""
    rate = 0.0
    for k in range(cfg.K):
        rate += math.log2(1.0 + sinr_scalar(W, channels.h[k], k, cfg.sigma_c2, Rprobe))
    p = 0.0
    for j in range(W.shape[1]):
        for i in range(W.shape[0]):
            p += abs(W[i, j]) ** 2
    if Rprobe is not None:
        for i in range(W.shape[0]):
            p += Rprobe[i, i].real
    return rate / (p / cfg.eps_pa + cfg.P0)


def grid_search_ee(cfg: SystemConfig, channels: ChannelSet,
                   resolution: int = 10_000) -> tuple[float, float]:
    """Exhaustive single-user EE scan over transmit power with matched-filter
    beamforming; returns (best power, best EE)."""
    if cfg.K != 1:
        raise ValueError("grid oracle is defined for K = 1")
    h = channels.h[0]
    g = float(np.real(h.conj() @ h))
    powers = np.linspace(cfg.Pmax / resolution, cfg.Pmax, resolution)
    ee = np.log2(1.0 + powers * g / cfg.sigma_c2) / (powers / cfg.eps_pa + cfg.P0)
    i = int(np.argmax(ee))
    return float(powers[i]), float(ee[i])


@dataclass(frozen=True)
class AuditReport:
    ok: bool
    max_violation: float
    details: dict

    def __str__(self):
        lines = [f"audit {'pass' if self.ok else 'FAIL'} "
                 f"(max violation {self.max_violation:.3e})"]
        for k, v in self.details.items():
            lines.append(f"  {k}: {v:.3e}")
        return "\n".join(lines)


def audit_solution(sol: metrics.BeamformerSolution, cfg: SystemConfig,
                   channels: ChannelSet, extended: bool = False,
                   tol: float = 1e-6,
                   crb_bound: float | None = None,
                   sinr_bounds: np.ndarray | None = None) -> AuditReport:
    """Recompute every constraint of the originating problem and report the
    worst relative violation.

    crb_bound / sinr_bounds default to the configured thresholds; pass
    overrides for relaxed problem variants (e.g. no sensing constraint).
    """
    details = {}
    gammas = np.asarray(sinr_bounds if sinr_bounds is not None else cfg.gamma,
                        dtype=float)
    sinr = metrics.all_sinr(sol.W, channels, cfg, sol.Rprobe)
    for k in range(cfg.K):
        details[f"sinr_{k}"] = float((gammas[k] - sinr[k]) / max(gammas[k], 1e-12))
    p = metrics.transmit_power(sol.W, sol.Rprobe)
    details["power"] = (p - cfg.Pmax) / cfg.Pmax
    if crb_bound is None:
        crb_bound = cfg.rho ** 2 if not extended else cfg.rho
    if np.isfinite(crb_bound):
        if extended:
            crb = metrics.crb_extended(sol.rx, cfg)
        else:
            crb = metrics.crb_point(sol.W, channels.theta, channels.alpha,
                                    cfg, sol.Rprobe)
        details["crb"] = (crb - crb_bound) / crb_bound
    worst = max(details.values())
    return AuditReport(ok=worst <= tol, max_violation=float(worst), details=details)
