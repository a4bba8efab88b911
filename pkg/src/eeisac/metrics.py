"""Performance metrics for a candidate beamformer: SINR, rate, power, both
energy-efficiency figures and the estimation bounds they are built on.

Sign conventions: the transmit covariance is R_x = W W^H (+ R_probe when a
dedicated probing covariance is present).  The angle bound uses the transposed
covariance in its quadratic forms, matching the steering convention of
:mod:`eeisac.steering`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .scenario import ChannelSet, SystemConfig
from .steering import steering, steering_derivative

CRB_SINGULAR_TOL = 1e-12


@dataclass
class BeamformerSolution:
    """Beamforming matrix plus optional probing covariance and solve metadata."""

    W: np.ndarray                       # M x K, columns w_k [sqrt(W)]
    Rprobe: np.ndarray | None = None    # M x M Hermitian PSD [W]
    trace: list = field(default_factory=list)   # per-outer-iteration records
    achieved: dict = field(default_factory=dict)
    status: str = "optimal"

    @property
    def rx(self) -> np.ndarray:
        r = self.W @ self.W.conj().T
        if self.Rprobe is not None:
            r = r + self.Rprobe
        return r

    def validate(self, cfg: SystemConfig, tol_power: float = 1e-7) -> None:
        if self.Rprobe is not None:
            asym = np.max(np.abs(self.Rprobe - self.Rprobe.conj().T))
            if asym > 1e-10 * (1.0 + np.max(np.abs(self.Rprobe))):
                raise ValueError("probing covariance is not Hermitian")
            if np.min(np.linalg.eigvalsh((self.Rprobe + self.Rprobe.conj().T) / 2)) < -1e-9:
                raise ValueError("probing covariance has negative eigenvalues")
        if transmit_power(self.W, self.Rprobe) > cfg.Pmax + tol_power:
            raise ValueError("power budget exceeded")


@dataclass(frozen=True)
class MetricReport:
    sinr: np.ndarray        # linear, per user
    sum_rate: float         # bits per channel use
    P_total: float          # transmit power [W]
    ee_c: float             # bits per joule-normalized rate/power ratio
    crb: float              # rad^2 (point) or matrix-CRB scalar (extended)
    ee_s: float


def sinr_k(W: np.ndarray, h_k: np.ndarray, k: int, sigma_c2: float,
           Rprobe: np.ndarray | None = None) -> float:
    """Received SINR of user k under beamformer W (and optional probing cov)."""
    sig = abs(h_k.conj() @ W[:, k]) ** 2
    interf = 0.0
    for j in range(W.shape[1]):
        if j != k:
            interf += abs(h_k.conj() @ W[:, j]) ** 2
    if Rprobe is not None:
        interf += float(np.real(h_k.conj() @ Rprobe @ h_k))
    return float(sig / (sigma_c2 + interf))


def all_sinr(W: np.ndarray, channels: ChannelSet, cfg: SystemConfig,
             Rprobe: np.ndarray | None = None) -> np.ndarray:
    return np.array([sinr_k(W, channels.h[k], k, cfg.sigma_c2, Rprobe)
                     for k in range(cfg.K)])


def sum_rate(W: np.ndarray, channels: ChannelSet, cfg: SystemConfig,
             Rprobe: np.ndarray | None = None) -> float:
    return float(np.sum(np.log2(1.0 + all_sinr(W, channels, cfg, Rprobe))))


def transmit_power(W: np.ndarray, Rprobe: np.ndarray | None = None) -> float:
    p = float(np.sum(np.abs(W) ** 2))
    if Rprobe is not None:
        p += float(np.real(np.trace(Rprobe)))
    return p


def consumed_power(W: np.ndarray, cfg: SystemConfig,
                   Rprobe: np.ndarray | None = None) -> float:
    """Total drawn power: amplifier-scaled transmit power plus circuit power."""
    return transmit_power(W, Rprobe) / cfg.eps_pa + cfg.P0


def ee_comm(W: np.ndarray, channels: ChannelSet, cfg: SystemConfig,
            Rprobe: np.ndarray | None = None) -> float:
    """Communication-centric EE: sum rate over consumed power [bit/J-normalized]."""
    return sum_rate(W, channels, cfg, Rprobe) / consumed_power(W, cfg, Rprobe)


def fisher_term(Rx: np.ndarray, theta: float) -> float:
    """Schur-complemented quadratic-form bundle the angle CRB is built on.

    F = M a'(θ)^H Rx^T a'(θ) + a^H Rx^T a ||a'||^2 - M |a^H Rx^T a'|^2 / (a^H Rx^T a),
    all steering vectors on the transmit array.
    """
    m_tx = Rx.shape[0]
    a = steering(theta, m_tx)
    da = steering_derivative(theta, m_tx)
    rt = Rx.T
    g = float(np.real(a.conj() @ rt @ a))
    if g <= CRB_SINGULAR_TOL * max(1.0, float(np.real(np.trace(Rx)))):
        return 0.0
    dd = float(np.real(da.conj() @ rt @ da))
    s = complex(a.conj() @ rt @ da)
    nd2 = float(np.real(da.conj() @ da))
    return m_tx * dd + g * nd2 - m_tx * abs(s) ** 2 / g


def crb_point_from_cov(Rx: np.ndarray, theta: float, alpha: complex,
                       cfg: SystemConfig) -> float:
    """Angle CRB [rad^2] for a point target given the transmit covariance.

    Returns +inf when the Fisher term is numerically singular (e.g. M = 1).
    """
    if abs(alpha) <= 0:
        raise ValueError("reflection coefficient must be nonzero")
    f = fisher_term(Rx, theta)
    scale = max(1.0, float(np.real(np.trace(Rx)))) * cfg.M ** 3
    if f <= CRB_SINGULAR_TOL * scale:
        return float("inf")
    return cfg.sigma_s2 / (2.0 * cfg.L * abs(alpha) ** 2 * f)


def crb_point(W: np.ndarray, theta: float, alpha: complex, cfg: SystemConfig,
              Rprobe: np.ndarray | None = None) -> float:
    rx = W @ W.conj().T
    if Rprobe is not None:
        rx = rx + Rprobe
    return crb_point_from_cov(rx, theta, alpha, cfg)


def crb_extended(Rx: np.ndarray, cfg: SystemConfig) -> float:
    """Response-matrix CRB for the extended target: sigma_s^2 * M * tr(Rx^-1) / L."""
    rx = (Rx + Rx.conj().T) / 2
    eig = np.linalg.eigvalsh(rx)
    if eig[0] <= 1e-10 * max(np.real(np.trace(rx)), 0.0) / cfg.M:
        raise ValueError("rank-deficient sample covariance: extended-target "
                         "estimation needs M independent streams")
    return float(cfg.sigma_s2 * cfg.M * np.sum(1.0 / eig) / cfg.L)


def ee_sense(crb_value: float, W: np.ndarray, cfg: SystemConfig,
             Rprobe: np.ndarray | None = None) -> float:
    """Sensing-centric EE: inverse CRB per joule across the frame."""
    if not (crb_value > 0):
        raise ValueError("CRB must be positive")
    return (1.0 / crb_value) / (cfg.L * consumed_power(W, cfg, Rprobe))


def report(sol: BeamformerSolution, channels: ChannelSet, cfg: SystemConfig,
           extended: bool = False) -> MetricReport:
    """Full metric evaluation of a solution (point or extended target)."""
    sinr = all_sinr(sol.W, channels, cfg, sol.Rprobe)
    rate = float(np.sum(np.log2(1.0 + sinr)))
    p_tx = transmit_power(sol.W, sol.Rprobe)
    eec = rate / consumed_power(sol.W, cfg, sol.Rprobe)
    if extended:
        crb = crb_extended(sol.rx, cfg)
    else:
        crb = crb_point(sol.W, channels.theta, channels.alpha, cfg, sol.Rprobe)
    ees = ee_sense(crb, sol.W, cfg, sol.Rprobe) if np.isfinite(crb) else 0.0
    return MetricReport(sinr=sinr, sum_rate=rate, P_total=p_tx,
                        ee_c=eec, crb=crb, ee_s=ees)
