"""Number (Fock) state sampling.

The complex-P sampler places each occupied mode on a circular contour of
radius ``r``: the classical phase ``phi`` is uniform, the nonclassical phase
``theta`` is von Mises with concentration ``r**2``, and

    alpha = r exp(i(phi + theta/2)),   beta = r exp(-i(phi - theta/2)),

so that ``alpha * beta = r**2 exp(i theta)``. Each occupied mode contributes
the weight ``n! I0(r^2) / r^(2n) * exp(i(r^2 sin(theta) - n theta))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, i0e

from .ensemble import POSITIVE_P, Q_FUNCTION, PhaseSample, WeightedEnsemble

__all__ = [
    "FockSpec",
    "sample_von_mises",
    "log_weight_modulus",
    "sample_fock_complexP",
    "sample_fock_Q",
    "asymptotic_weight",
    "weight_asymptotic_check",
    "exact_weight_mean",
    "wigner_fock_value",
    "WIGNER_MAX_N",
]

GAUSSIAN_KAPPA = 1e4
WIGNER_MAX_N = 30


@dataclass
class FockSpec:
    """Occupation numbers per mode and the contour radius used for each.

    ``radius`` defaults to ``sqrt(n)``; entries for empty modes are ignored.
    """

    occupations: np.ndarray
    radius: np.ndarray | None = field(default=None)

    def __post_init__(self):
        n = np.atleast_1d(np.asarray(self.occupations))
        if n.ndim != 1 or np.any(n < 0) or np.any(n != np.round(n)):
            raise ValueError(f"occupations must be non-negative integers, got {self.occupations!r}")
        self.occupations = n.astype(np.int64)
        if self.radius is None:
            r = np.sqrt(self.occupations.astype(float))
        else:
            r = np.broadcast_to(np.asarray(self.radius, dtype=float), n.shape).copy()
        occupied = self.occupations > 0
        if np.any(~np.isfinite(r[occupied])) or np.any(r[occupied] <= 0):
            raise ValueError("radius must be finite and positive for every occupied mode")
        r[~occupied] = 0.0
        self.radius = r

    @property
    def mode_count(self) -> int:
        return self.occupations.shape[0]


def _best_fisher(kappa: float, size: int, rng: np.random.Generator) -> np.ndarray:
    if kappa < 1e-5:
        r = 1.0 / kappa + kappa
    else:
        tau = 1.0 + math.sqrt(1.0 + 4.0 * kappa * kappa)
        rho = (tau - math.sqrt(2.0 * tau)) / (2.0 * kappa)
        r = (1.0 + rho * rho) / (2.0 * rho)
    out = np.empty(size)
    todo = np.arange(size)
    while todo.size:
        n = todo.size
        u1, u2, u3 = rng.random(n), rng.random(n), rng.random(n)
        z = np.cos(np.pi * u1)
        f = (1.0 + r * z) / (r + z)
        c = kappa * (r - f)
        with np.errstate(divide="ignore", invalid="ignore"):
            ok = (c * (2.0 - c) - u2 > 0) | (np.log(c / u2) + 1.0 - c >= 0)
        theta = np.sign(u3 - 0.5) * np.arccos(np.clip(f, -1.0, 1.0))
        out[todo[ok]] = theta[ok]
        todo = todo[~ok]
    return out


def sample_von_mises(kappa: float, rng: np.random.Generator, size=None):
    """Angles in ``[-pi, pi)`` from the density proportional to ``exp(kappa cos(theta))``.

    Best-Fisher rejection sampling; ``kappa > 1e4`` uses the wrapped Gaussian
    limit with variance ``1/kappa``.
    """
    kappa = float(kappa)
    if not math.isfinite(kappa):
        raise ValueError(f"kappa must be finite, got {kappa}")
    if kappa < 0:
        raise ValueError(f"kappa must be non-negative, got {kappa}")
    n = 1 if size is None else int(np.prod(size))
    if kappa < 1e-12:
        theta = rng.uniform(-np.pi, np.pi, n)
    elif kappa > GAUSSIAN_KAPPA:
        theta = rng.standard_normal(n) / math.sqrt(kappa)
    else:
        theta = _best_fisher(kappa, n, rng)
    theta = np.mod(theta + np.pi, 2.0 * np.pi) - np.pi
    if size is None:
        return float(theta[0])
    return theta.reshape(size)


def log_weight_modulus(n, r) -> np.ndarray:
    """``log(n! I0(r^2) / r^(2n))`` per mode, zero for empty modes."""
    n = np.asarray(n)
    r = np.asarray(r, dtype=float)
    occupied = n > 0
    rr = np.where(occupied, r, 1.0) ** 2
    val = gammaln(n + 1.0) + np.log(i0e(rr)) + rr - n * np.log(rr)
    return np.where(occupied, val, 0.0)


def sample_fock_complexP(spec: FockSpec, rng: np.random.Generator, size: int | None = None):
    """Complex-P contour samples for a factorised number state.

    Returns a :class:`PhaseSample` when ``size`` is None, else a
    :class:`WeightedEnsemble` of ``size`` trajectories. Empty modes sit at
    ``alpha = beta = 0`` and contribute a unit weight factor.
    """
    s = 1 if size is None else int(size)
    m = spec.mode_count
    alpha = np.zeros((s, m), dtype=complex)
    beta = np.zeros((s, m), dtype=complex)
    phase = np.zeros(s)
    log_mod = math.fsum(log_weight_modulus(spec.occupations, spec.radius).tolist())
    if not math.isfinite(log_mod):
        raise FloatingPointError(f"weight modulus is not finite for {spec}")
    for k in range(m):
        n_k = int(spec.occupations[k])
        if n_k == 0:
            continue
        r = float(spec.radius[k])
        phi = rng.uniform(-np.pi, np.pi, s)
        theta = sample_von_mises(r * r, rng, size=s)
        alpha[:, k] = r * np.exp(1j * (phi + theta / 2))
        beta[:, k] = r * np.exp(-1j * (phi - theta / 2))
        phase += r * r * np.sin(theta) - n_k * theta
    weight = np.exp(log_mod + 1j * phase)
    if size is None:
        return PhaseSample(alpha[0], beta[0], weight[0])
    return WeightedEnsemble(alpha, beta, weight, POSITIVE_P)


def sample_fock_Q(spec: FockSpec, rng: np.random.Generator, size: int | None = None):
    """Direct Husimi Q samples: ``|alpha|^2 ~ Gamma(n + 1)``, uniform phase."""
    s = 1 if size is None else int(size)
    shape = (s, spec.mode_count)
    intensity = rng.gamma(spec.occupations + 1.0, 1.0, size=shape)
    phi = rng.uniform(-np.pi, np.pi, size=shape)
    alpha = np.sqrt(intensity) * np.exp(1j * phi)
    if size is None:
        return PhaseSample(alpha[0], np.conj(alpha[0]), 1.0)
    return WeightedEnsemble(alpha, np.conj(alpha), np.ones(s), Q_FUNCTION)


def asymptotic_weight(n: int, theta) -> np.ndarray:
    """Weight with the prefactor dropped (its large-``n`` limit is 1), ``r^2 = n``."""
    theta = np.asarray(theta, dtype=float)
    return np.exp(1j * n * (np.sin(theta) - theta))


def exact_weight_mean(n: int) -> float:
    """Closed form of ``<exp(i n (sin(theta) - theta))>`` over ``VM(0, n)``.

    Equals ``n^n / (n! I0(n))``; its large-``n`` expansion is ``1 - 15/(72 n)``.
    """
    return math.exp(n * math.log(n) - math.lgamma(n + 1) - (math.log(i0e(n)) + n))


def weight_asymptotic_check(n: int, samples: int, rng: np.random.Generator,
                            return_error: bool = False):
    """Deviation from 1 of the mean truncated weight at ``r^2 = n``.

    Returns the real part of the sample mean minus one, and optionally the
    standard error of that mean.
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    theta = sample_von_mises(n, rng, size=samples)
    w = asymptotic_weight(n, theta)
    dev = math.fsum(w.real.tolist()) / samples - 1.0
    if return_error:
        return dev, float(np.std(w.real, ddof=1) / math.sqrt(samples))
    return dev


def _laguerre(n: int, x: np.ndarray) -> np.ndarray:
    prev = np.ones_like(x)
    if n == 0:
        return prev
    cur = 1.0 - x
    for k in range(1, n):
        prev, cur = cur, ((2 * k + 1 - x) * cur - k * prev) / (k + 1)
    return cur


def wigner_fock_value(n: int, alpha):
    """Wigner function of ``|n>``: ``(2/pi) e^{-2|a|^2} (-1)^n L_n(4|a|^2)``."""
    if n < 0 or int(n) != n:
        raise ValueError(f"n must be a non-negative integer, got {n}")
    if n > WIGNER_MAX_N:
        raise ValueError(f"n = {n} exceeds the Laguerre stability bound {WIGNER_MAX_N}")
    r2 = np.abs(np.asarray(alpha)) ** 2
    val = (2.0 / np.pi) * np.exp(-2.0 * r2) * (-1.0) ** n * _laguerre(int(n), 4.0 * r2)
    return float(val) if np.ndim(val) == 0 else val
