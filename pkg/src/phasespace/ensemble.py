"""Weighted phase-space samples and ensemble averages.

A sample is an extended amplitude vector ``(alpha, beta)`` with a complex
weight. In the doubled (positive/complex-P) phase space ``beta`` is an
independent variable; in the Wigner and Q spaces ``beta == conj(alpha)``.
Weighted averages are ``(1/S) * sum(weight * f)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterator

import numpy as np

__all__ = [
    "Ordering",
    "POSITIVE_P",
    "WIGNER",
    "Q_FUNCTION",
    "ordering_for",
    "PhaseSample",
    "WeightedEnsemble",
    "weighted_mean",
    "mean_and_error",
    "moment_estimate_number",
    "effective_sample_size",
    "compensated_sum",
    "compensated_mean",
]


@dataclass(frozen=True)
class Ordering:
    """Operator ordering of a phase-space representation.

    ``s`` is the vacuum occupation per mode: 0 for normal order (P),
    1/2 for symmetric order (Wigner) and 1 for anti-normal order (Q).
    """

    s: float
    doubled: bool

    def __post_init__(self):
        if self.s < 0 or not math.isfinite(self.s):
            raise ValueError(f"ordering parameter must be finite and >= 0, got {self.s}")
        if self.doubled != (self.s == 0):
            raise ValueError("only the normally ordered (s = 0) space is doubled")

    @property
    def name(self) -> str:
        return {0.0: "P", 0.5: "W", 1.0: "Q"}.get(self.s, f"s={self.s:g}")


POSITIVE_P = Ordering(0.0, True)
WIGNER = Ordering(0.5, False)
Q_FUNCTION = Ordering(1.0, False)

_BY_NAME = {"p": POSITIVE_P, "positive-p": POSITIVE_P, "w": WIGNER, "wigner": WIGNER,
            "q": Q_FUNCTION}


def ordering_for(value) -> Ordering:
    """Look up an ordering by name ("P", "W", "Q") or by its ``s`` value."""
    if isinstance(value, Ordering):
        return value
    if isinstance(value, str):
        try:
            return _BY_NAME[value.strip().lower()]
        except KeyError:
            raise ValueError(f"unknown ordering {value!r}") from None
    s = float(value)
    return Ordering(s, s == 0)


@dataclass
class PhaseSample:
    """One trajectory: mode amplitudes, conjugate amplitudes and weight."""

    alpha: np.ndarray
    beta: np.ndarray
    weight: complex = 1.0 + 0.0j

    def __post_init__(self):
        self.alpha = np.atleast_1d(np.asarray(self.alpha, dtype=complex))
        self.beta = np.atleast_1d(np.asarray(self.beta, dtype=complex))
        self.weight = complex(self.weight)
        if self.alpha.shape != self.beta.shape or self.alpha.ndim != 1:
            raise ValueError("alpha and beta must be vectors of equal length")
        if not np.isfinite(self.weight):
            raise ValueError("sample weight is not finite")

    @property
    def mode_count(self) -> int:
        return self.alpha.shape[0]


class WeightedEnsemble:
    """Ensemble of ``S`` samples over ``M`` modes, stored column-wise.

    Parameters
    ----------
    alpha, beta : array_like, shape (S, M)
        Mode amplitudes and conjugate amplitudes.
    weight : array_like, shape (S,)
        Complex trajectory weights.
    ordering : Ordering
    """

    def __init__(self, alpha, beta, weight, ordering: Ordering):
        alpha = np.asarray(alpha, dtype=complex)
        beta = np.asarray(beta, dtype=complex)
        if alpha.ndim == 1:
            alpha = alpha[:, None]
            beta = beta[:, None]
        weight = np.broadcast_to(np.asarray(weight, dtype=complex), alpha.shape[:1]).copy()
        if alpha.shape != beta.shape or alpha.ndim != 2:
            raise ValueError(f"alpha {alpha.shape} and beta {beta.shape} must be (S, M)")
        if not ordering.doubled and np.any(beta != np.conj(alpha)):
            raise ValueError("non-doubled ensembles require beta == conj(alpha)")
        self.alpha = alpha
        self.beta = beta
        self.weight = weight
        self.ordering = ordering

    @classmethod
    def from_samples(cls, samples, ordering: Ordering) -> "WeightedEnsemble":
        samples = list(samples)
        if not samples:
            raise ValueError("cannot build an ensemble from zero samples")
        m = samples[0].mode_count
        if any(s.mode_count != m for s in samples):
            raise ValueError("all samples must share the same mode count")
        return cls(
            np.stack([s.alpha for s in samples]),
            np.stack([s.beta for s in samples]),
            np.array([s.weight for s in samples]),
            ordering,
        )

    def __len__(self) -> int:
        return self.alpha.shape[0]

    def __iter__(self) -> Iterator[PhaseSample]:
        for a, b, w in zip(self.alpha, self.beta, self.weight):
            yield PhaseSample(a, b, w)

    def __getitem__(self, idx) -> PhaseSample:
        return PhaseSample(self.alpha[idx], self.beta[idx], self.weight[idx])

    @property
    def samples(self) -> list[PhaseSample]:
        return list(self)

    @property
    def mode_count(self) -> int:
        return self.alpha.shape[1]

    def concat(self, other: "WeightedEnsemble") -> "WeightedEnsemble":
        if other.ordering != self.ordering or other.mode_count != self.mode_count:
            raise ValueError("ensembles differ in ordering or mode count")
        return WeightedEnsemble(
            np.concatenate([self.alpha, other.alpha]),
            np.concatenate([self.beta, other.beta]),
            np.concatenate([self.weight, other.weight]),
            self.ordering,
        )

    def to_csv(self, path) -> None:
        """Write one row per sample: re/im of each alpha, beta, then weight."""
        m = self.mode_count
        header = []
        for name in ("alpha", "beta"):
            for k in range(m):
                header += [f"{name}{k}_re", f"{name}{k}_im"]
        header += ["weight_re", "weight_im"]
        with open(Path(path), "w", newline="") as fh:
            fh.write(f"# ordering s={self.ordering.s!r}\n")
            writer = csv.writer(fh)
            writer.writerow(header)
            for a, b, w in zip(self.alpha, self.beta, self.weight):
                row = []
                for z in (*a, *b, w):
                    row += [repr(float(z.real)), repr(float(z.imag))]
                writer.writerow(row)

    @classmethod
    def from_csv(cls, path) -> "WeightedEnsemble":
        with open(Path(path), newline="") as fh:
            first = fh.readline()
            if not first.startswith("# ordering s="):
                raise ValueError(f"{path}: missing ordering line")
            ordering = ordering_for(float(first.split("=", 1)[1]))
            reader = csv.reader(fh)
            header = next(reader)
            data = np.array([[float(v) for v in row] for row in reader])
        m = (len(header) - 2) // 4
        z = data[:, 0::2] + 1j * data[:, 1::2]
        return cls(z[:, :m], z[:, m:2 * m], z[:, 2 * m], ordering)


def compensated_sum(values) -> complex:
    """Order-insensitive sum of complex values (``math.fsum`` per component)."""
    values = np.asarray(values, dtype=complex).ravel()
    return complex(math.fsum(values.real.tolist()), math.fsum(values.imag.tolist()))


def compensated_mean(values) -> complex:
    values = np.asarray(values)
    return compensated_sum(values) / values.size


def mean_and_error(terms) -> tuple[complex, float]:
    """Compensated mean of ``terms`` and its combined real/imaginary standard error."""
    terms = np.asarray(terms, dtype=complex).ravel()
    n = terms.shape[0]
    if n == 0:
        raise ValueError("mean of an empty set of terms")
    mean = compensated_sum(terms) / n
    if n < 2:
        return mean, 0.0
    dev = terms - mean
    var_re = math.fsum((dev.real ** 2).tolist()) / (n - 1)
    var_im = math.fsum((dev.imag ** 2).tolist()) / (n - 1)
    return mean, math.sqrt((var_re + var_im) / n)


def weighted_mean(ens: WeightedEnsemble, f: Callable) -> tuple[complex, float]:
    """Weighted average ``(1/S) sum_j weight_j f(alpha_j, beta_j)``.

    ``f`` receives the ``(S, M)`` arrays ``alpha`` and ``beta`` and must return
    one value per sample. The standard error treats the real and imaginary
    parts as independent and is their combined magnitude.
    """
    if len(ens) == 0:
        raise ValueError("weighted_mean of an empty ensemble")
    values = np.broadcast_to(np.asarray(f(ens.alpha, ens.beta), dtype=complex), (len(ens),))
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        raise ValueError(f"moment function is not finite at sample index {int(bad[0])}")
    return mean_and_error(ens.weight * values)


def moment_estimate_number(ens: WeightedEnsemble) -> tuple[np.ndarray, np.ndarray]:
    """Particle number per mode, ``Re<beta_k alpha_k> - s``, with standard errors.

    The error is that of the real part alone, since only it enters the estimate.
    """
    if len(ens) == 0:
        raise ValueError("moment estimate of an empty ensemble")
    est = np.empty(ens.mode_count)
    err = np.empty(ens.mode_count)
    n = len(ens)
    for k in range(ens.mode_count):
        terms = (ens.weight * ens.beta[:, k] * ens.alpha[:, k]).real
        if not np.all(np.isfinite(terms)):
            raise ValueError(f"moment is not finite at sample index {int(np.flatnonzero(~np.isfinite(terms))[0])}")
        mean = math.fsum(terms.tolist()) / n
        est[k] = mean - ens.ordering.s
        err[k] = float(np.std(terms, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return est, err


def effective_sample_size(weights) -> float:
    """``|sum w|^2 / sum |w|^2``; equals S for uniform weights."""
    w = np.asarray(weights, dtype=complex)
    total = compensated_sum(w)
    return abs(total) ** 2 / math.fsum((np.abs(w) ** 2).tolist())
