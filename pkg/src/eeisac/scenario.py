"""Scenario configuration, unit conversion and reproducible channel generation.

Internally everything is SI: watts and radians. dBm / dB / degrees are accepted
only at the configuration boundary (``make_config`` and the CLI).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np


def dbm_to_watt(p_dbm: float) -> float:
    return 10.0 ** ((p_dbm - 30.0) / 10.0)


def watt_to_dbm(p_w: float) -> float:
    if p_w <= 0:
        raise ValueError("power must be positive to express in dBm")
    return 30.0 + 10.0 * np.log10(p_w)


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


@dataclass(frozen=True)
class SystemConfig:
    """All physical and algorithmic parameters of one scenario.

    rho carries the sensing accuracy requirement: for a point target it is the
    root-CRB threshold on the angle in radians (the CRB bound is rho**2); for
    the extended target it is read directly as the bound on the response-matrix
    CRB.
    """

    M: int                      # transmit antennas
    N_rx: int                   # receive antennas
    L: int                      # snapshots per frame
    K: int                      # single-antenna users
    eps_pa: float               # power-amplifier efficiency, in (0, 1]
    P0: float                   # circuit power [W]
    Pmax: float                 # transmit power budget [W]
    sigma_c2: float             # communication noise power [W]
    sigma_s2: float             # sensing noise power [W]
    gamma: tuple[float, ...]    # per-user SINR thresholds, linear
    rho: float                  # root-CRB threshold [rad] / extended CRB bound
    rng_seed: int = 0

    def __post_init__(self):
        if self.M < 1 or self.N_rx < self.M:
            raise ValueError("need 1 <= M <= N_rx")
        if not (1 <= self.K <= self.M):
            raise ValueError(f"K exceeds M (K={self.K}, M={self.M})" if self.K > self.M
                             else "K must be >= 1")
        if self.L < 1:
            raise ValueError("L must be >= 1")
        if not (0.0 < self.eps_pa <= 1.0):
            raise ValueError("eps_pa must lie in (0, 1]")
        for name in ("P0", "Pmax", "sigma_c2", "sigma_s2"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        if len(self.gamma) != self.K:
            raise ValueError("gamma must hold one threshold per user")
        if any(g <= 0 for g in self.gamma):
            raise ValueError("SINR thresholds must be > 0")
        if self.rho <= 0:
            raise ValueError("rho must be > 0")

    def with_(self, **kw) -> "SystemConfig":
        return replace(self, **kw)


@dataclass(frozen=True)
class ChannelSet:
    """Downlink channels and target parameters for one realization."""

    h: np.ndarray                       # K x M complex channel matrix (rows h_k)
    theta: float                        # target angle [rad]
    alpha: complex                      # target reflection coefficient
    scatterers: tuple[tuple[float, complex], ...] | None = None

    def __post_init__(self):
        if not np.all(np.isfinite(self.h)):
            raise ValueError("channel entries must be finite")


_REQUIRED_KEYS = ("M", "N_rx", "L", "K", "eps_pa", "P0", "Pmax",
                  "sigma_c2", "sigma_s2", "gamma", "rho")

# accepted spellings for unit-suffixed string values
_POWER_KEYS = {"P0", "Pmax", "sigma_c2", "sigma_s2"}


def _parse_power(value) -> float:
    """Power in watts from a number (watts) or a 'x dBm' / 'x W' string."""
    if isinstance(value, str):
        tok = value.strip().lower().replace("dbm", " dbm").replace("w", " w").split()
        num = float(tok[0])
        unit = tok[1] if len(tok) > 1 else "w"
        if unit == "dbm":
            return dbm_to_watt(num)
        if unit == "w":
            return num
        raise ValueError(f"unknown power unit in {value!r}")
    return float(value)


def _parse_gamma(value, k: int) -> tuple[float, ...]:
    """Per-user linear SINR thresholds from a scalar/list, 'x dB' strings allowed."""
    def one(v) -> float:
        if isinstance(v, str):
            tok = v.strip().lower().split()
            num = float(tok[0])
            if len(tok) > 1 and tok[1] == "db":
                return db_to_linear(num)
            return num
        return float(v)

    if isinstance(value, (list, tuple)):
        vals = tuple(one(v) for v in value)
    else:
        vals = (one(value),) * k
    return vals


def _parse_angle(value) -> float:
    """Angle in radians from a number (radians) or an 'x deg' string."""
    if isinstance(value, str):
        tok = value.strip().lower().split()
        num = float(tok[0])
        if len(tok) > 1 and tok[1] in ("deg", "degree", "degrees"):
            return float(np.deg2rad(num))
        return num
    return float(value)


def make_config(raw: dict) -> SystemConfig:
    """Validated SystemConfig from a flat key-value map with optional unit suffixes.

    Raises KeyError for a missing required key and ValueError for violated
    invariants (e.g. K > M).
    """
    missing = [k for k in _REQUIRED_KEYS if k not in raw]
    if missing:
        raise KeyError(f"missing config keys: {', '.join(missing)}")
    k_users = int(raw["K"])
    return SystemConfig(
        M=int(raw["M"]),
        N_rx=int(raw["N_rx"]),
        L=int(raw["L"]),
        K=k_users,
        eps_pa=float(raw["eps_pa"]),
        P0=_parse_power(raw["P0"]),
        Pmax=_parse_power(raw["Pmax"]),
        sigma_c2=_parse_power(raw["sigma_c2"]),
        sigma_s2=_parse_power(raw["sigma_s2"]),
        gamma=_parse_gamma(raw["gamma"], k_users),
        rho=_parse_angle(raw["rho"]),
        rng_seed=int(raw.get("rng_seed", 0)),
    )


def default_config(**overrides) -> SystemConfig:
    """Desk-scale default scenario; keyword overrides are applied on top."""
    raw = {
        "M": 8, "N_rx": 20, "L": 30, "K": 2,
        "eps_pa": 0.35,
        "P0": "33 dBm", "Pmax": "30 dBm",
        "sigma_c2": 0.01, "sigma_s2": 1.0,
        "gamma": "10 dB",
        "rho": "0.15 deg",
        "rng_seed": 0,
    }
    raw.update(overrides)
    return make_config(raw)


def draw_channels(cfg: SystemConfig, theta: float = np.pi / 2,
                  alpha: complex = 1.0 + 0.0j,
                  scatterers=None) -> ChannelSet:
    """K i.i.d. CN(0, I_M) user channels, deterministic given cfg.rng_seed."""
    rng = np.random.default_rng(cfg.rng_seed)
    h = (rng.standard_normal((cfg.K, cfg.M)) +
         1j * rng.standard_normal((cfg.K, cfg.M))) / np.sqrt(2.0)
    scat = tuple(scatterers) if scatterers is not None else None
    return ChannelSet(h=h, theta=float(theta), alpha=complex(alpha), scatterers=scat)
