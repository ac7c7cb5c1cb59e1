"""Interaction-picture midpoint integrator for Stratonovich SPDEs.

The equations integrated have the form

    d psi = (A[psi] + L[grad] psi) dt + B[psi] . dw

on a periodic lattice. One step is

    psi1 = T psi0
    psi2 = psi1 + A[psim] dt + B[psim] . dw,   psim = (psi1 + psi2)/2
    psi3 = T psi2

with ``T = F^-1 exp(L(ik) dt/2) F`` (optionally masked by the de-aliasing
projector). The implicit midpoint is found by fixed-point sweeps that reuse
one noise draw, which is what makes the scheme Stratonovich.

Fields may carry leading batch axes (one per trajectory); the lattice is
always the last axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .ensemble import POSITIVE_P, Ordering
from .lattice import Lattice, fft_forward, fft_inverse

__all__ = [
    "FieldState",
    "ModelSpec",
    "IntegratorConfig",
    "Propagator",
    "ObservableRecord",
    "IntegrationError",
    "make_propagator",
    "make_noise",
    "step",
    "run",
    "diffraction_model",
    "cubic_model",
]


class IntegrationError(FloatingPointError):
    """The field became non-finite during a step."""


@dataclass
class FieldState:
    """Complex field(s) on a lattice at time ``t``.

    ``psi`` has shape ``(..., n_points)``. ``rho2`` is the optional reservoir
    density filled by the apodiser, with the same shape as ``psi``.
    """

    psi: np.ndarray
    t: float = 0.0
    ordering: Ordering = POSITIVE_P
    weight: np.ndarray | complex = 1.0
    rho2: np.ndarray | None = None
    midpoint_change: float = 0.0

    def __post_init__(self):
        self.psi = np.asarray(self.psi, dtype=complex)
        if not math.isfinite(self.t):
            raise ValueError("state time must be finite")

    def copy(self, **changes) -> "FieldState":
        new = replace(self, **changes)
        if "psi" not in changes:
            new.psi = self.psi.copy()
        if self.rho2 is not None and "rho2" not in changes:
            new.rho2 = self.rho2.copy()
        return new


@dataclass
class ModelSpec:
    """Terms of the SPDE.

    Parameters
    ----------
    linear_symbol : callable, optional
        ``L(ik)``: receives ``1j * k_grid`` and returns the complex multiplier
        of the linear operator per wavenumber.
    drift : callable, optional
        ``A(psi, t)``, evaluated pointwise in position space.
    noise : callable, optional
        ``noise(psi, dw, t)`` returning ``B[psi] . dw`` with the shape of
        ``psi``; ``dw`` has shape ``(noise_count, *psi.shape)``.
    noise_count : int
        Number of independent real noise fields.
    """

    linear_symbol: Callable[[np.ndarray], np.ndarray] | None = None
    drift: Callable[[np.ndarray, float], np.ndarray] | None = None
    noise: Callable[[np.ndarray, np.ndarray, float], np.ndarray] | None = None
    noise_count: int = 0

    def __post_init__(self):
        if self.noise is not None and self.noise_count < 1:
            raise ValueError("a noise term needs noise_count >= 1")


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float
    n_steps: int
    midpoint_iterations: int = 4
    dealias: bool = False
    store_stride: int = 1

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be positive and finite, got {self.dt}")
        if self.n_steps < 0:
            raise ValueError("n_steps must be non-negative")
        if self.midpoint_iterations < 1:
            raise ValueError("midpoint_iterations must be >= 1")
        if self.store_stride < 1:
            raise ValueError("store_stride must be >= 1")


def diffraction_model() -> ModelSpec:
    """``d psi/dt = (i/2) d^2 psi/dx^2``."""
    return ModelSpec(linear_symbol=lambda ik: 0.5j * ik ** 2)


def cubic_model(g: complex = -1j, linear: bool = True) -> ModelSpec:
    """Diffraction plus the cubic drift ``g |psi|^2 psi``."""
    return ModelSpec(
        linear_symbol=(lambda ik: 0.5j * ik ** 2) if linear else None,
        drift=lambda psi, t: g * (psi * np.conj(psi)) * psi,
    )


class Propagator:
    """Half-step linear transform ``F^-1 exp(L(ik) dt/2) [P(k)] F``."""

    def __init__(self, lattice: Lattice, factor: np.ndarray):
        self.lattice = lattice
        self.factor = factor
        self.identity = bool(np.all(factor == 1.0))

    def __call__(self, psi: np.ndarray) -> np.ndarray:
        if self.identity:
            return psi
        return fft_inverse(self.lattice, self.factor * fft_forward(self.lattice, psi))


def make_propagator(model: ModelSpec, lattice: Lattice, dt: float, dealias: bool = False,
                    projector=None) -> Propagator:
    """Build the half-step propagator; ``dealias`` applies the momentum projector."""
    if model.linear_symbol is None:
        factor = np.ones(lattice.n_points, dtype=complex)
    else:
        with np.errstate(invalid="ignore", over="ignore"):
            exponent = np.broadcast_to(
                np.asarray(model.linear_symbol(1j * lattice.k_grid), dtype=complex),
                (lattice.n_points,),
            ) * (dt / 2)
        if not np.all(np.isfinite(exponent)):
            bad = int(np.flatnonzero(~np.isfinite(exponent))[0])
            raise ValueError(f"linear symbol is not finite at k = {lattice.k_grid[bad]}")
        factor = np.exp(exponent)
    if dealias:
        if projector is None:
            from .apodisation import build_projector

            projector = build_projector(lattice)
        factor = factor * projector.mask
    return Propagator(lattice, factor)


def make_noise(lattice: Lattice, dt: float, noise_count: int, rng: np.random.Generator,
               batch_shape: tuple = ()) -> np.ndarray:
    """Real Gaussian increments with variance ``dt/dv`` per point and field.

    Shape ``(noise_count, *batch_shape, n_points)``.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    shape = (noise_count, *batch_shape, lattice.n_points)
    return rng.standard_normal(shape) * math.sqrt(dt / lattice.dv)


def step(state: FieldState, model: ModelSpec, cfg: IntegratorConfig, T: Propagator,
         rng: np.random.Generator | None = None) -> FieldState:
    """Advance ``state`` by one time step ``cfg.dt``."""
    dt = cfg.dt
    t_mid = state.t + 0.5 * dt
    psi1 = T(state.psi)
    psi2 = psi1
    change = 0.0
    if model.drift is not None or model.noise is not None:
        dw = None
        if model.noise is not None:
            if rng is None:
                raise ValueError("a stochastic model needs an rng")
            dw = make_noise(T.lattice, dt, model.noise_count, rng, psi1.shape[:-1])
        psim = psi1
        for _ in range(cfg.midpoint_iterations):
            inc = np.zeros_like(psi1)
            if model.drift is not None:
                inc = inc + model.drift(psim, t_mid) * dt
            if dw is not None:
                inc = inc + model.noise(psim, dw, t_mid)
            new = psi1 + inc
            change = float(np.max(np.abs(new - psi2), initial=0.0))
            psi2 = new
            psim = 0.5 * (psi1 + psi2)
    psi3 = T(psi2)
    if not np.all(np.isfinite(psi3)):
        finite = np.abs(psi2[np.isfinite(psi2)])
        raise IntegrationError(
            f"non-finite field at t = {state.t + dt:.6g} "
            f"(max |psi| before last transform {finite.max(initial=0.0):.3e}); "
            "the step size is probably too large"
        )
    return state.copy(psi=psi3, t=state.t + dt, midpoint_change=change)


@dataclass
class ObservableRecord:
    """Time series of observer outputs plus free-form run metadata."""

    times: list = field(default_factory=list)
    data: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def append(self, t: float, values: dict) -> None:
        if self.times and values.keys() != self.data.keys():
            raise ValueError("observers must return the same keys at every time")
        self.times.append(float(t))
        for key, val in values.items():
            self.data.setdefault(key, []).append(val)

    def series(self, key: str) -> np.ndarray:
        return np.asarray(self.data[key])

    def __len__(self) -> int:
        return len(self.times)


def _observe(observers, state: FieldState) -> dict:
    out = {}
    for obs in observers:
        out.update(obs(state))
    return out


def run(state0: FieldState, model: ModelSpec, cfg: IntegratorConfig, observers=(),
        rng: np.random.Generator | None = None, lattice: Lattice | None = None,
        boundary=None, record: ObservableRecord | None = None) -> ObservableRecord:
    """Integrate ``cfg.n_steps`` steps, observing every ``cfg.store_stride`` steps.

    ``boundary`` is an optional callable ``(state, dt, rng) -> state`` applied
    after every step (used for apodisation). Observers map a state to a dict
    of named values. The final state is stored in ``record.metadata["final_state"]``.
    """
    if lattice is None:
        raise ValueError("run needs the lattice the state lives on")
    lattice.check_shape(state0.psi, "initial field")
    T = make_propagator(model, lattice, cfg.dt, cfg.dealias)
    record = record if record is not None else ObservableRecord()
    state = state0
    record.append(state.t, _observe(observers, state))
    for i in range(1, cfg.n_steps + 1):
        try:
            state = step(state, model, cfg, T, rng)
            if boundary is not None:
                state = boundary(state, cfg.dt, rng)
        except IntegrationError as exc:
            raise IntegrationError(f"step {i}: {exc}") from exc
        if i % cfg.store_stride == 0 or i == cfg.n_steps:
            record.append(state.t, _observe(observers, state))
    record.metadata["final_state"] = state
    return record
