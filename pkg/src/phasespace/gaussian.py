"""Multimode Gaussian states sampled through a square root of the covariance.

Samples are ``alpha_i = alpha0_i + B_ij w_j`` with ``2M`` independent real unit
Gaussians ``w``. The extended covariance ``sigma`` (s-ordered, over the
vector ``(a_1..a_M, a_1^dag..a_M^dag)``) must equal ``B @ B.T``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ensemble import Ordering, PhaseSample, WeightedEnsemble

__all__ = [
    "CovarianceSpec",
    "NoiseFactor",
    "FactorizationError",
    "factor_covariance",
    "sample_gaussian",
    "randomize_phase",
    "coherent_spec",
    "thermal_spec",
    "squeezed_spec",
]

SYMMETRY_TOL = 1e-10
RESIDUAL_TOL = 1e-10


class FactorizationError(ValueError):
    """No square root with the required structure exists for ``sigma``."""


@dataclass
class CovarianceSpec:
    mean: np.ndarray
    sigma: np.ndarray
    ordering: Ordering

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=complex).ravel()
        self.sigma = np.asarray(self.sigma, dtype=complex)
        n = self.mean.shape[0]
        if n % 2 or self.sigma.shape != (n, n):
            raise ValueError(
                f"mean must have length 2M and sigma shape (2M, 2M); "
                f"got {self.mean.shape} and {self.sigma.shape}"
            )
        if not self.ordering.doubled:
            m = n // 2
            if not np.allclose(self.mean[m:], np.conj(self.mean[:m]), rtol=0, atol=1e-12):
                raise ValueError("mean must satisfy mean[M + j] == conj(mean[j])")

    @property
    def mode_count(self) -> int:
        return self.mean.shape[0] // 2


@dataclass
class NoiseFactor:
    b: np.ndarray

    def residual(self, sigma: np.ndarray) -> float:
        return float(np.max(np.abs(self.b @ self.b.T - sigma), initial=0.0))


def _quadrature_map(m: int) -> np.ndarray:
    # rows: alpha_j = x_j + i y_j, alpha_{M+j} = x_j - i y_j
    eye = np.eye(m)
    return np.block([[eye, 1j * eye], [eye, -1j * eye]])


def _psd_sqrt(c: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(c)
    floor = -RESIDUAL_TOL * max(1.0, float(np.max(np.abs(vals), initial=0.0)))
    if vals.min(initial=0.0) < floor:
        raise FactorizationError(
            f"quadrature covariance is not positive semidefinite "
            f"(smallest eigenvalue {vals.min():.3e})"
        )
    return vecs * np.sqrt(np.clip(vals, 0.0, None))


def _takagi_factor(sigma: np.ndarray) -> np.ndarray:
    """``B`` with ``B @ B.T == sigma`` for complex symmetric ``sigma``.

    Uses the real symmetric embedding ``[[X, Y], [Y, -X]]`` whose
    non-negative eigenpairs ``(s, [u; v])`` give Takagi vectors ``u + i v``.
    """
    n = sigma.shape[0]
    x, y = sigma.real, sigma.imag
    vals, vecs = np.linalg.eigh(np.block([[x, y], [y, -x]]))
    top = vals[n:]
    q = vecs[:n, n:] + 1j * vecs[n:, n:]
    return q * np.sqrt(np.clip(top, 0.0, None))


def factor_covariance(spec: CovarianceSpec) -> NoiseFactor:
    """Square root ``B`` of the covariance, respecting the reality constraint.

    For classical (non-doubled) orderings the factor is built from the real
    covariance of the quadratures ``(x, y)``, which makes row ``M + j`` the
    complex conjugate of row ``j``. Doubled spaces use a Takagi factor.
    """
    sigma = spec.sigma
    asym = float(np.max(np.abs(sigma - sigma.T), initial=0.0))
    if asym > SYMMETRY_TOL:
        raise FactorizationError(f"sigma is not symmetric (max |sigma - sigma^T| = {asym:.3e})")
    m = spec.mode_count
    if spec.ordering.doubled:
        b = _takagi_factor(sigma)
    else:
        u = _quadrature_map(m)
        u_inv = np.linalg.inv(u)
        c = u_inv @ sigma @ u_inv.T
        imag = float(np.max(np.abs(c.imag), initial=0.0))
        if imag > RESIDUAL_TOL:
            raise FactorizationError(
                f"sigma does not describe real quadratures (imaginary residual {imag:.3e})"
            )
        c = 0.5 * (c.real + c.real.T)
        b = u @ _psd_sqrt(c)
    factor = NoiseFactor(b)
    res = factor.residual(sigma)
    if res > RESIDUAL_TOL * max(1.0, float(np.max(np.abs(sigma), initial=0.0))):
        raise FactorizationError(f"no admissible factorization (residual {res:.3e})")
    return factor


def sample_gaussian(spec: CovarianceSpec, factor: NoiseFactor, rng: np.random.Generator,
                    size: int | None = None):
    """Draw one :class:`PhaseSample` (``size=None``) or a :class:`WeightedEnsemble`."""
    n = spec.mean.shape[0]
    if factor.b.shape != (n, n):
        raise ValueError(f"factor shape {factor.b.shape} does not match spec dimension {n}")
    m = n // 2
    w = rng.standard_normal((1 if size is None else size, n))
    z = spec.mean + w @ factor.b.T
    alpha, beta = z[:, :m], z[:, m:]
    if not spec.ordering.doubled:
        # exact conjugacy; the factor guarantees it up to round-off
        beta = np.conj(alpha)
    if size is None:
        return PhaseSample(alpha[0], beta[0], 1.0)
    return WeightedEnsemble(alpha, beta, np.ones(size), spec.ordering)


def randomize_phase(sample, rng: np.random.Generator):
    """Rotate all modes by one uniform phase per trajectory; weights unchanged.

    Accepts a :class:`PhaseSample` or a :class:`WeightedEnsemble`.
    """
    if isinstance(sample, WeightedEnsemble):
        phi = rng.uniform(-np.pi, np.pi, size=(len(sample), 1))
        rot = np.exp(1j * phi)
        alpha = sample.alpha * rot
        beta = np.conj(alpha) if not sample.ordering.doubled else sample.beta * np.conj(rot)
        return WeightedEnsemble(alpha, beta, sample.weight.copy(), sample.ordering)
    rot = np.exp(1j * rng.uniform(-np.pi, np.pi))
    return PhaseSample(sample.alpha * rot, sample.beta * np.conj(rot), sample.weight)


def _extend(mean) -> np.ndarray:
    mean = np.atleast_1d(np.asarray(mean, dtype=complex))
    return np.concatenate([mean, np.conj(mean)])


def coherent_spec(amplitudes, ordering: Ordering) -> CovarianceSpec:
    """Coherent state: ``sigma`` has ``s`` on the a/a^dag cross blocks."""
    return thermal_spec(np.zeros(np.size(amplitudes)), ordering, amplitudes)


def thermal_spec(occupations, ordering: Ordering, amplitudes=None) -> CovarianceSpec:
    """Displaced thermal state with mean occupation ``n`` per mode."""
    n = np.atleast_1d(np.asarray(occupations, dtype=float))
    m = n.shape[0]
    amp = np.zeros(m) if amplitudes is None else amplitudes
    sigma = np.zeros((2 * m, 2 * m), dtype=complex)
    cross = np.diag(n + ordering.s)
    sigma[:m, m:] = cross
    sigma[m:, :m] = cross
    return CovarianceSpec(_extend(amp), sigma, ordering)


def squeezed_spec(r: float, ordering: Ordering, theta: float = 0.0, amplitude=0.0) -> CovarianceSpec:
    """Single-mode squeezed vacuum (optionally displaced).

    Moments: ``<a^dag a> = sinh(r)^2``, ``<a a> = -exp(i theta) sinh(r) cosh(r)``.
    """
    n = np.sinh(r) ** 2
    m_aa = -np.exp(1j * theta) * np.sinh(r) * np.cosh(r)
    sigma = np.array([[m_aa, n + ordering.s], [n + ordering.s, np.conj(m_aa)]])
    return CovarianceSpec(_extend(amplitude), sigma, ordering)
