"""Boundary treatment for periodic lattices.

* a momentum projector that zeroes ``|k| >= k_max/2`` (de-aliasing);
* a complex polynomial absorber ``gamma(x) = gamma'(x) + i V(x)`` with
  ``gamma'(x) = Gamma (x/x_max)^(2p)`` and, optionally, the time-dependent
  phase-shift term ``V(x, t) = -p(2p-1)/(2p+1) * t * Gamma / x_max^(2p) * x^(2p-2)``
  that cancels the diffractive shift induced by the absorber;
* s-ordered apodisation noise restoring the vacuum occupation ``s`` per mode;
* a reservoir density ``rho2`` recording what the absorber removes, so that
  ``N_a + N_r`` is conserved.

The absorber is applied as its own sub-step after each integrator step, using
the exact solution of ``d psi = -gamma psi dt + sqrt(gamma') zeta dt`` over
one step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lattice import Lattice
from .spde import FieldState

__all__ = [
    "Projector",
    "build_projector",
    "ApodisationProfile",
    "phase_correction_coefficient",
    "build_absorber",
    "apodisation_noise",
    "apply_apodisation",
    "update_reservoir",
    "Apodiser",
]


@dataclass(frozen=True)
class Projector:
    mask: np.ndarray

    def __call__(self, spectrum: np.ndarray) -> np.ndarray:
        return spectrum * self.mask


def build_projector(lattice: Lattice) -> Projector:
    """Mask keeping ``|k| < k_max/2``; the tie ``|k| == k_max/2`` is dropped."""
    mask = (np.abs(lattice.k_grid) < 0.5 * lattice.k_max).astype(float)
    mask.setflags(write=False)
    return Projector(mask)


@dataclass(frozen=True)
class ApodisationProfile:
    """Absorber sampled on a lattice at one time.

    ``order_2p`` is the leading power of ``x``; ``p = order_2p // 2``.
    """

    order_2p: int
    gamma_boundary: float
    phase_correction: bool
    gamma_real: np.ndarray
    v_imag: np.ndarray
    t: float = 0.0

    @property
    def p(self) -> int:
        return self.order_2p // 2

    @property
    def gamma(self) -> np.ndarray:
        return self.gamma_real + 1j * self.v_imag


def phase_correction_coefficient(order_2p: int, gamma_boundary: float, t: float,
                                 x_max: float) -> complex:
    """Coefficient of ``x^(2p-2)`` in ``gamma``; purely imaginary and negative."""
    p = order_2p // 2
    return -1j * p * (2 * p - 1) / (2 * p + 1) * t * gamma_boundary / x_max ** (2 * p)


def build_absorber(lattice: Lattice, order_2p: int, gamma_boundary: float, t: float = 0.0,
                   phase_correction: bool = False) -> ApodisationProfile:
    """Sample the complex absorber on ``lattice`` at time ``t``."""
    if int(order_2p) != order_2p or order_2p % 2 or order_2p < 4:
        raise ValueError(f"order_2p must be an even integer >= 4, got {order_2p}")
    if not gamma_boundary >= 0 or not math.isfinite(gamma_boundary):
        raise ValueError(f"boundary absorption must be finite and >= 0, got {gamma_boundary}")
    if t < 0:
        raise ValueError("absorber time must be >= 0")
    order_2p = int(order_2p)
    x = lattice.x
    # (x/x_max)^2p is exactly even on the lattice because x^2 is
    u = (x / lattice.x_max) ** 2
    gamma_real = gamma_boundary * u ** (order_2p // 2)
    if phase_correction and gamma_boundary > 0:
        coeff = phase_correction_coefficient(order_2p, gamma_boundary, t, lattice.x_max)
        v_imag = coeff.imag * (x * x) ** (order_2p // 2 - 1)
    else:
        v_imag = np.zeros_like(x)
    return ApodisationProfile(order_2p, float(gamma_boundary), bool(phase_correction),
                              gamma_real, v_imag, float(t))


def _check_profile(profile: ApodisationProfile, lattice_points: int) -> None:
    if profile.gamma_real.shape != (lattice_points,):
        raise ValueError("profile does not match the lattice")
    if not (np.all(np.isfinite(profile.gamma_real)) and np.all(np.isfinite(profile.v_imag))):
        raise ValueError("absorber profile contains non-finite values")


def apodisation_noise(state: FieldState, dv: float, dt: float,
                      rng: np.random.Generator) -> np.ndarray:
    """Integrated complex noise per point with ``<|xi|^2> = 2 s dt/dv``, ``<xi xi> = 0``."""
    s = state.ordering.s
    std = math.sqrt(s * dt / dv)
    shape = state.psi.shape
    return std * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def _noise_gain(gamma_real: np.ndarray, dt: float) -> np.ndarray:
    # sqrt(gamma') scaled so the discrete update keeps the vacuum variance s/dv exactly;
    # tends to sqrt(gamma') as dt -> 0
    g = gamma_real * dt
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(g > 1e-12, -np.expm1(-2.0 * g) / (2.0 * g), 1.0 - g)
    return np.sqrt(gamma_real * ratio)


def _substep(psi: np.ndarray, profile: ApodisationProfile, dt: float, noise) -> np.ndarray:
    out = psi * np.exp(-profile.gamma * dt)
    if noise is not None:
        out = out + _noise_gain(profile.gamma_real, dt) * noise
    return out


def apply_apodisation(state: FieldState, profile: ApodisationProfile, dt: float,
                      rng: np.random.Generator | None = None, quantum: bool = False,
                      dv: float | None = None, noise: np.ndarray | None = None):
    """Absorber sub-step; returns ``(new_state, noise)``.

    Without noise this is ``psi * exp(-gamma dt)``. With ``quantum`` set the
    s-ordered apodisation noise is added (pass ``noise`` to reuse a draw,
    otherwise it is drawn from ``rng`` and needs the cell volume ``dv``).
    The returned noise is what :func:`update_reservoir` must be given.
    """
    _check_profile(profile, state.psi.shape[-1])
    if quantum and state.ordering.s > 0 and noise is None:
        if rng is None or dv is None:
            raise ValueError("quantum apodisation needs rng and dv to draw noise")
        noise = apodisation_noise(state, dv, dt, rng)
    elif not quantum or state.ordering.s == 0:
        noise = None
    if noise is not None and noise.shape != state.psi.shape:
        raise ValueError(f"noise shape {noise.shape} does not match field {state.psi.shape}")
    new = state.copy(psi=_substep(state.psi, profile, dt, noise))
    return new, noise


def update_reservoir(state: FieldState, profile: ApodisationProfile, noise, dt: float,
                     after: FieldState | None = None) -> FieldState:
    """Add to ``rho2`` the density the absorber sub-step removed from ``psi``.

    ``state`` is the field *before* the sub-step and ``noise`` the realisation
    used by :func:`apply_apodisation`. The increment is the Stratonovich integral
    of ``2 gamma' |psi|^2 - (sqrt(gamma') zeta conj(psi) + c.c.)`` over the
    sub-step, which with the exact sub-step equals ``|psi_before|^2 - |psi_after|^2``;
    classically that is ``|psi|^2 (1 - exp(-2 gamma' dt))``.
    """
    _check_profile(profile, state.psi.shape[-1])
    if noise is not None and np.shape(noise) != state.psi.shape:
        raise ValueError(f"noise shape {np.shape(noise)} does not match field {state.psi.shape}")
    psi = state.psi
    if noise is None:
        inc = (psi.real ** 2 + psi.imag ** 2) * -np.expm1(-2.0 * profile.gamma_real * dt)
    else:
        new = _substep(psi, profile, dt, noise) if after is None else after.psi
        inc = (psi.real ** 2 + psi.imag ** 2) - (new.real ** 2 + new.imag ** 2)
    base = after if after is not None else state
    rho2 = np.zeros(psi.shape) if state.rho2 is None else state.rho2
    return base.copy(rho2=rho2 + inc)


@dataclass
class Apodiser:
    """Per-step boundary callable for :func:`phasespace.spde.run`.

    The absorber is evaluated at the midpoint time of the step just taken.
    """

    lattice: Lattice
    order_2p: int
    gamma_boundary: float
    phase_correction: bool = False
    quantum: bool = False
    track_reservoir: bool = True

    def __post_init__(self):
        build_absorber(self.lattice, self.order_2p, self.gamma_boundary, 0.0,
                       self.phase_correction)

    def profile_at(self, t: float) -> ApodisationProfile:
        return build_absorber(self.lattice, self.order_2p, self.gamma_boundary, max(t, 0.0),
                              self.phase_correction)

    def __call__(self, state: FieldState, dt: float, rng=None) -> FieldState:
        profile = self.profile_at(state.t - 0.5 * dt)
        new, noise = apply_apodisation(state, profile, dt, rng, self.quantum, self.lattice.dv)
        if self.track_reservoir:
            new = update_reservoir(state, profile, noise, dt, after=new)
        return new
