"""Convert doubled-space (P) samples into Wigner or Q samples.

A P sample ``(alpha0, beta0)`` is split into a classical part
``a_plus = (alpha0 + conj(beta0))/2`` and a nonclassical part
``a_minus = (alpha0 - conj(beta0))/2``. The output amplitude is
``a_plus + delta_noise`` with complex Gaussian noise of variance ``s`` per
mode, and the weight picks up ``exp((|a_minus|^2 - i*delta)/s)`` where
``i*delta = noise . conj(a_minus) - conj(noise) . a_minus``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ensemble import (
    PhaseSample,
    WeightedEnsemble,
    compensated_sum,
    effective_sample_size,
    ordering_for,
)

__all__ = [
    "ConvolutionParams",
    "split_classical",
    "convolve_sample",
    "convolve_ensemble",
    "wigner_density_estimate",
    "smoothed_fock_density",
    "DensityEstimate",
]


@dataclass
class ConvolutionParams:
    """Per-sample quantities of the convolution, kept for inspection."""

    s_target: float
    alpha_plus: np.ndarray
    alpha_minus: np.ndarray
    displacement: np.ndarray
    delta: np.ndarray


def split_classical(alpha0, beta0) -> tuple[np.ndarray, np.ndarray]:
    alpha0 = np.asarray(alpha0, dtype=complex)
    beta0c = np.conj(np.asarray(beta0, dtype=complex))
    return 0.5 * (alpha0 + beta0c), 0.5 * (alpha0 - beta0c)


def _convolve(alpha0, beta0, weight, s: float, rng: np.random.Generator):
    if not s > 0:
        raise ValueError(f"target ordering must have s > 0, got {s}")
    a_plus, a_minus = split_classical(alpha0, beta0)
    std = math.sqrt(s / 2.0)
    disp = std * (rng.standard_normal(a_plus.shape) + 1j * rng.standard_normal(a_plus.shape))
    # delta = -i (D . conj(a-) - conj(D) . a-) = 2 Im(D . conj(a-)), real by construction
    delta = 2.0 * np.imag(disp * np.conj(a_minus)).sum(axis=-1)
    exponent = (np.sum(np.abs(a_minus) ** 2, axis=-1) - 1j * delta) / s
    params = ConvolutionParams(s, a_plus, a_minus, disp, delta)
    return a_plus + disp, weight * np.exp(exponent), params


def convolve_sample(p_sample: PhaseSample, s_target: float, rng: np.random.Generator,
                    return_params: bool = False):
    """Turn one P sample into an ``s_target``-ordered sample with corrected weight."""
    alpha, weight, params = _convolve(p_sample.alpha, p_sample.beta, p_sample.weight,
                                      float(s_target), rng)
    out = PhaseSample(alpha, np.conj(alpha), complex(weight))
    return (out, params) if return_params else out


def convolve_ensemble(ens: WeightedEnsemble, s_target: float, rng: np.random.Generator,
                      return_params: bool = False):
    """Vectorised :func:`convolve_sample` over a doubled-space ensemble."""
    if not ens.ordering.doubled:
        raise ValueError("convolution sampling needs a doubled (P) ensemble as input")
    target = ordering_for(float(s_target))
    alpha, weight, params = _convolve(ens.alpha, ens.beta, ens.weight, target.s, rng)
    out = WeightedEnsemble(alpha, np.conj(alpha), weight, target)
    return (out, params) if return_params else out


@dataclass
class DensityEstimate:
    value: float
    std_error: float
    imag_residual: float
    imag_std_error: float
    bandwidth: float
    effective_samples: float


def wigner_density_estimate(ens: WeightedEnsemble, alpha_probe: complex, bandwidth: float,
                            mode: int = 0) -> DensityEstimate:
    """Weighted Gaussian kernel estimate of the single-mode density at ``alpha_probe``.

    The kernel is isotropic with standard deviation ``bandwidth`` per
    quadrature, so the estimate targets the quasi-probability smoothed to
    ordering ``s + 2 * bandwidth**2``.
    """
    if len(ens) == 0:
        raise ValueError("density estimate of an empty ensemble")
    if not bandwidth > 0:
        raise ValueError("bandwidth must be positive")
    h2 = bandwidth * bandwidth
    d2 = np.abs(ens.alpha[:, mode] - alpha_probe) ** 2
    terms = ens.weight * np.exp(-d2 / (2 * h2)) / (2 * np.pi * h2)
    n = terms.shape[0]
    mean = compensated_sum(terms) / n
    se_re = float(np.std(terms.real, ddof=1) / math.sqrt(n))
    se_im = float(np.std(terms.imag, ddof=1) / math.sqrt(n))
    return DensityEstimate(mean.real, se_re, mean.imag, se_im, bandwidth,
                           effective_sample_size(ens.weight))


def smoothed_fock_density(n: int, s: float) -> float:
    """Exact ``s``-ordered quasi-probability of ``|n>`` at the origin.

    ``(1/(pi s)) ((s - 1)/s)^n``; ``s = 1/2`` gives the Wigner value ``(-1)^n 2/pi``.
    """
    return ((s - 1.0) / s) ** n / (math.pi * s)
