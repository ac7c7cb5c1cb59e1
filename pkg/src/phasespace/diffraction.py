"""Exact Gaussian diffraction and the log-psi power series.

For ``d psi/dt = (i/2) d^2 psi/dx^2 - gamma(x) psi`` with
``psi = exp(-sum_q alpha_q x^(2q))`` and ``gamma = sum_q gamma_q x^(2q)``,
matching powers of ``x`` gives

    d alpha_q/dt = gamma_q - i beta_q + (i/2)(2q+2)(2q+1) alpha_{q+1},
    (1/2) (sum_q 2q alpha_q x^(2q-1))^2 = sum_q beta_q x^(2q).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "GaussianBeam",
    "LogPsiSeries",
    "exact_field",
    "exact_alphas",
    "beta_coefficients",
    "series_rhs",
    "series_evolve",
    "SeriesBlowUp",
]


class SeriesBlowUp(FloatingPointError):
    pass


@dataclass(frozen=True)
class GaussianBeam:
    """Initial field ``amplitude * exp(-x^2 / (2 sigma^2))``."""

    sigma: float = 1.0
    amplitude: complex = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("beam width must be positive")


def exact_field(beam: GaussianBeam, t: float, x) -> np.ndarray:
    """Free-space solution ``sigma (sigma^2 + i t)^(-1/2) exp(-x^2 / (2 (sigma^2 + i t)))``."""
    if t < 0:
        raise ValueError("exact_field is defined for t >= 0")
    z = beam.sigma ** 2 + 1j * t
    x = np.asarray(x, dtype=float)
    return beam.amplitude * beam.sigma / np.sqrt(z) * np.exp(-x * x / (2 * z))


def exact_alphas(beam: GaussianBeam, t: float) -> np.ndarray:
    """``(alpha_0, alpha_1)`` of the exact solution, with ``psi(0, 0) = amplitude``."""
    z = beam.sigma ** 2 + 1j * t
    c = -np.log(beam.amplitude * beam.sigma + 0j)
    return np.array([c + 0.5 * np.log(z), 1.0 / (2.0 * z)])


@dataclass
class LogPsiSeries:
    """Coefficients ``alpha_q``, ``q = 0..p_max``, of ``psi = exp(-sum alpha_q x^(2q))``."""

    alphas: np.ndarray

    def __post_init__(self):
        self.alphas = np.asarray(self.alphas, dtype=complex).ravel()

    @property
    def p_max(self) -> int:
        return self.alphas.shape[0] - 1

    def field(self, x) -> np.ndarray:
        x2 = np.asarray(x, dtype=float) ** 2
        return np.exp(-np.polynomial.polynomial.polyval(x2, self.alphas))


def beta_coefficients(alphas) -> np.ndarray:
    """``beta_q = (1/2) sum_{j=1..q} (2j)(2(q+1-j)) alpha_j alpha_{q+1-j}``.

    Returned for ``q = 0..2 p_max - 1`` (``beta_0 = 0``).
    """
    a = np.asarray(getattr(alphas, "alphas", alphas), dtype=complex)
    p = a.shape[0] - 1
    if p < 1:
        return np.zeros(1, dtype=complex)
    # d = coefficients of the derivative series sum_j 2j alpha_j y^(j-1)
    d = 2 * np.arange(1, p + 1) * a[1:]
    beta = np.zeros(2 * p, dtype=complex)
    beta[1:] = 0.5 * np.convolve(d, d)
    return beta


def series_rhs(alphas: np.ndarray, gammas: np.ndarray) -> np.ndarray:
    """Time derivative of the truncated coefficients (``alpha_{p_max+1} = 0``)."""
    p = alphas.shape[0] - 1
    beta = beta_coefficients(alphas)[: p + 1]
    q = np.arange(p + 1)
    upper = np.zeros_like(alphas)
    upper[:-1] = alphas[1:]
    return gammas - 1j * beta + 0.5j * (2 * q + 2) * (2 * q + 1) * upper


def series_evolve(alphas0, gammas, t_final: float, dt: float = 1e-3,
                  t0: float = 0.0, observe: Callable | None = None) -> LogPsiSeries:
    """RK4 integration of the coefficient equations from ``t0`` to ``t_final``.

    ``gammas`` is either a constant array of absorber coefficients
    ``gamma_q`` (same length as the series) or a callable ``(t, alphas)``
    returning one. ``observe(t, alphas)`` is called after every step.
    """
    a = np.array(getattr(alphas0, "alphas", alphas0), dtype=complex)
    if callable(gammas):
        gfun = gammas
    else:
        gconst = np.asarray(gammas, dtype=complex)
        if gconst.shape != a.shape:
            raise ValueError("gammas must have the same length as the series")
        gfun = lambda t, al: gconst  # noqa: E731
    n = int(round((t_final - t0) / dt))
    if n < 0:
        raise ValueError("t_final must not precede t0")
    h = (t_final - t0) / n if n else 0.0
    t = t0
    for i in range(n):
        k1 = series_rhs(a, gfun(t, a))
        k2 = series_rhs(a + 0.5 * h * k1, gfun(t + 0.5 * h, a + 0.5 * h * k1))
        k3 = series_rhs(a + 0.5 * h * k2, gfun(t + 0.5 * h, a + 0.5 * h * k2))
        k4 = series_rhs(a + h * k3, gfun(t + h, a + h * k3))
        a = a + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        t = t0 + (i + 1) * h
        if not np.all(np.isfinite(a)):
            raise SeriesBlowUp(f"log-psi coefficients became non-finite at t = {t:.6g}")
        if observe is not None:
            observe(t, a)
    return LogPsiSeries(a)
