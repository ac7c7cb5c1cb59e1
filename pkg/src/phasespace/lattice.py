"""Uniform periodic lattice and the Fourier transform pair used throughout.

The grid is x_j = -x_max + j*dx for j = 0..n-1, i.e. it contains -x_max and
excludes +x_max, which is identified with -x_max by periodicity. Wavenumbers
are stored in the usual FFT wrap-around order (0, +, ..., -).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = ["Lattice", "make_lattice", "fft_forward", "fft_inverse", "unitary_spectrum"]


@dataclass(frozen=True)
class Lattice:
    """Immutable 1D periodic lattice.

    Attributes
    ----------
    n_points : int
        Number of grid points (even).
    x_max : float
        Half-width of the domain ``[-x_max, x_max)``.
    dimension : int
        Spatial dimension, fixed to 1.
    """

    n_points: int
    x_max: float
    dimension: int = 1
    x: np.ndarray = field(init=False, repr=False, compare=False)
    k_grid: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        x = -self.x_max + self.dx * np.arange(self.n_points)
        k = 2.0 * np.pi * np.fft.fftfreq(self.n_points, d=self.dx)
        x.setflags(write=False)
        k.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "k_grid", k)

    @property
    def dx(self) -> float:
        return 2.0 * self.x_max / self.n_points

    @property
    def dv(self) -> float:
        """Cell volume; equal to ``dx`` in one dimension."""
        return self.dx

    @property
    def k_max(self) -> float:
        return math.pi / self.dx

    @property
    def dk(self) -> float:
        return math.pi / self.x_max

    def central_index(self) -> int:
        """Index of the grid point at x = 0."""
        return self.n_points // 2

    def check_shape(self, arr: np.ndarray, what: str = "field") -> None:
        if np.shape(arr)[-1:] != (self.n_points,):
            raise ValueError(
                f"{what} has trailing length {np.shape(arr)[-1:]}, "
                f"lattice has {self.n_points} points"
            )


def make_lattice(n_points: int, x_max: float) -> Lattice:
    """Build a :class:`Lattice` after validating its parameters."""
    if isinstance(n_points, bool) or int(n_points) != n_points:
        raise ValueError(f"n_points must be an integer, got {n_points!r}")
    n_points = int(n_points)
    if n_points < 2 or n_points % 2:
        raise ValueError(f"n_points must be even and >= 2, got {n_points}")
    x_max = float(x_max)
    if not math.isfinite(x_max) or x_max <= 0:
        raise ValueError(f"x_max must be finite and positive, got {x_max}")
    return Lattice(n_points, x_max)


def fft_forward(lattice: Lattice, field: np.ndarray) -> np.ndarray:
    """Forward transform along the last axis (unnormalised, numpy convention)."""
    lattice.check_shape(field)
    return np.fft.fft(field, axis=-1)


def fft_inverse(lattice: Lattice, spectrum: np.ndarray) -> np.ndarray:
    """Inverse of :func:`fft_forward`; the round trip is the identity."""
    lattice.check_shape(spectrum, "spectrum")
    return np.fft.ifft(spectrum, axis=-1)


def unitary_spectrum(lattice: Lattice, field: np.ndarray) -> np.ndarray:
    """Spectrum rescaled so that ``sum(|F|**2) * dk == sum(|f|**2) * dx``."""
    return fft_forward(lattice, field) * (lattice.dx / math.sqrt(2.0 * math.pi))
