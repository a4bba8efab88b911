"""Half-wavelength uniform linear array response vectors and their angle derivatives.

Antenna index starts at zero, so the first entry of every response vector is 1.
"""

from dataclasses import dataclass

import numpy as np


def steering(theta: float, n: int) -> np.ndarray:
    """Array response of an n-element half-wavelength ULA at angle theta (rad).

    Entry m is exp(-j*pi*m*cos(theta)), m = 0..n-1.
    """
    if n < 1:
        raise ValueError("antenna count must be >= 1")
    m = np.arange(n)
    return np.exp(-1j * np.pi * m * np.cos(theta))


def steering_derivative(theta: float, n: int) -> np.ndarray:
    """d/dtheta of steering(theta, n); entry m is j*pi*m*sin(theta)*exp(-j*pi*m*cos(theta))."""
    if n < 1:
        raise ValueError("antenna count must be >= 1")
    m = np.arange(n)
    return 1j * np.pi * m * np.sin(theta) * np.exp(-1j * np.pi * m * np.cos(theta))


@dataclass(frozen=True)
class SteeringPair:
    """Transmit/receive responses plus the transmit derivative for one target angle."""

    a_t: np.ndarray
    a_r: np.ndarray
    da_t: np.ndarray


def steering_pair(theta: float, m_tx: int, n_rx: int) -> SteeringPair:
    return SteeringPair(
        a_t=steering(theta, m_tx),
        a_r=steering(theta, n_rx),
        da_t=steering_derivative(theta, m_tx),
    )
