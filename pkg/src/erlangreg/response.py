"""Frequency-domain instruments: response, distortion, bandwidth, group delay.

A smoother that fits and evaluates `delay` samples back ideally looks like
the pure delay exp(-i*q*omega) at low frequency.  The distortion
|H(omega) - exp(-i*q*omega)|**2 measures how far the realized response
strays from that ideal, and the distortion-free bandwidth f_c is the lowest
frequency where it reaches one half.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import solve_triangular

from .design import FilterRealization

__all__ = [
    "ResponseReport",
    "frequency_response",
    "response_matrix",
    "distortion",
    "bandwidth",
    "group_delay_dc",
    "response_report",
]


@dataclass(frozen=True)
class ResponseReport:
    """Gridded frequency response with the scalar summary metrics."""

    freqs: np.ndarray          # cycles/sample on [0, 1/2]
    responses: np.ndarray      # (n_outputs, grid) complex
    distortion: np.ndarray     # |E|**2 of the smoother output per grid point
    f_c: Optional[float]       # cycles/sample; None when 1/2 is never reached
    group_delay_dc: float      # samples


def _resolvent_input(realization: FilterRealization, omega: float) -> np.ndarray:
    """Solve (I - G e^{-i omega}) r = H by forward substitution.

    The system matrix is lower triangular because G is, so each frequency
    costs O(order**2) and no general inversion is needed.  The spectral
    radius of G is p < 1, keeping the solve well posed on the unit circle.
    """
    G = realization.first_net.G
    H = realization.first_net.H
    system = np.eye(G.shape[0], dtype=complex) - G * cmath.exp(-1j * omega)
    return solve_triangular(system, H.astype(complex), lower=True)


def frequency_response(realization: FilterRealization, omega: float, output: int = 0) -> complex:
    """Steady-state response of one derivative output at omega radians/sample."""
    if not 0 <= output < realization.spec.n_outputs:
        raise ValueError(
            f"output must be in [0, {realization.spec.n_outputs}), got {output}"
        )
    return complex(realization.state_output[output] @ _resolvent_input(realization, omega))


def response_matrix(realization: FilterRealization, omegas: np.ndarray) -> np.ndarray:
    """All derivative outputs' responses over a frequency grid."""
    omegas = np.asarray(omegas, dtype=float)
    out = np.empty((realization.spec.n_outputs, omegas.size), dtype=complex)
    for idx, omega in enumerate(omegas.ravel()):
        out[:, idx] = realization.state_output @ _resolvent_input(realization, omega)
    return out


def distortion(realization: FilterRealization, omega: float) -> float:
    """Squared complex error of the smoother against the ideal delay."""
    ideal = cmath.exp(-1j * realization.spec.delay * omega)
    return abs(frequency_response(realization, omega, 0) - ideal) ** 2


def bandwidth(realization: FilterRealization, grid_size: int = 2048) -> Optional[float]:
    """Least frequency (cycles/sample) where the distortion reaches 1/2.

    Brackets the first crossing on a uniform grid over [0, 1/2], then
    bisects to 1e-6 cycles/sample.  Returns None when the distortion stays
    below 1/2 all the way to the half-sample frequency.
    """
    if grid_size < 2:
        raise ValueError(f"grid_size must be at least 2, got {grid_size}")
    freqs = np.linspace(0.0, 0.5, grid_size)
    values = _distortion_grid(realization, freqs)
    above = np.nonzero(values >= 0.5)[0]
    if len(above) == 0:
        return None
    hi_idx = int(above[0])
    if hi_idx == 0:
        return 0.0
    lo, hi = freqs[hi_idx - 1], freqs[hi_idx]
    while hi - lo > 1e-6:
        mid = 0.5 * (lo + hi)
        if distortion(realization, 2.0 * np.pi * mid) >= 0.5:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def _distortion_grid(realization, freqs):
    omegas = 2.0 * np.pi * freqs
    smoother = response_matrix(realization, omegas)[0]
    ideal = np.exp(-1j * realization.spec.delay * omegas)
    return np.abs(smoother - ideal) ** 2


def group_delay_dc(realization: FilterRealization, step: float = 1e-4) -> float:
    """Negative phase slope of the smoother at DC, by central difference.

    Equals the delay parameter to within the finite-difference error.
    """
    ahead = frequency_response(realization, step, 0)
    behind = frequency_response(realization, -step, 0)
    return (cmath.phase(behind) - cmath.phase(ahead)) / (2.0 * step)


def response_report(realization: FilterRealization, grid_size: int = 2048) -> ResponseReport:
    """Evaluate the full grid report used by the analyze command."""
    if grid_size < 2:
        raise ValueError(f"grid_size must be at least 2, got {grid_size}")
    freqs = np.linspace(0.0, 0.5, grid_size)
    omegas = 2.0 * np.pi * freqs
    responses = response_matrix(realization, omegas)
    ideal = np.exp(-1j * realization.spec.delay * omegas)
    dist = np.abs(responses[0] - ideal) ** 2
    return ResponseReport(
        freqs=freqs,
        responses=responses,
        distortion=dist,
        f_c=bandwidth(realization, grid_size),
        group_delay_dc=group_delay_dc(realization),
    )
