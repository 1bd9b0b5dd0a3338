"""Finite-box lattice geometry and the kinetic, velocity, and position operators.

Conventions
-----------
Sites of the box {0, ..., L-1}^d are enumerated in row-major (C) order: the
site with coordinates (x_1, ..., x_d) has flat index
x_1 * L^(d-1) + x_2 * L^(d-2) + ... + x_d, and axis 0 is the transport
direction ("first coordinate").

The kinetic matrix couples nearest neighbours with amplitude -1, so its
periodic plane-wave dispersion is eps(k) = -2 sum_i cos(k_i) with
k_i = 2 pi j_i / L.  The velocity operator along axis 0 is the hopping form
(v phi)(x) = -i (phi(x + e1) - phi(x - e1)), which on an open box equals the
commutator i[H, X1] exactly; its periodic plane-wave eigenvalue is the group
velocity 2 sin(k_1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PERIODIC = "periodic"
DIRICHLET = "dirichlet"


@dataclass(frozen=True)
class LatticeSpec:
    """Finite box Lambda = {0..L-1}^d with periodic or open (dirichlet) boundary."""

    dimension: int
    linear_size: int
    boundary: str = PERIODIC

    def __post_init__(self):
        if int(self.dimension) < 1:
            raise ValueError(f"dimension must be >= 1, got {self.dimension}")
        if int(self.linear_size) < 2:
            raise ValueError(f"linear_size must be >= 2, got {self.linear_size}")
        if self.boundary not in (PERIODIC, DIRICHLET):
            raise ValueError(
                f"boundary must be {PERIODIC!r} or {DIRICHLET!r}, got {self.boundary!r}"
            )

    @property
    def site_count(self) -> int:
        return self.linear_size ** self.dimension

    @property
    def shape(self) -> tuple:
        return (self.linear_size,) * self.dimension

    def coordinates(self) -> np.ndarray:
        """Integer coordinates of every site, shape (site_count, d), row-major order."""
        idx = np.arange(self.site_count)
        return np.stack(np.unravel_index(idx, self.shape), axis=1)

    def neighbor_shift(self, axis: int, step: int) -> np.ndarray:
        """Flat index of x + step*e_axis for every site x.

        Periodic boundaries wrap modulo L; dirichlet marks out-of-box targets
        with -1.
        """
        coords = self.coordinates()
        coords[:, axis] += step
        if self.boundary == PERIODIC:
            coords[:, axis] %= self.linear_size
            return np.ravel_multi_index(tuple(coords.T), self.shape)
        inside = (coords[:, axis] >= 0) & (coords[:, axis] < self.linear_size)
        out = np.full(self.site_count, -1, dtype=np.intp)
        out[inside] = np.ravel_multi_index(tuple(coords[inside].T), self.shape)
        return out


def build_laplacian(spec: LatticeSpec) -> np.ndarray:
    """Kinetic matrix with -1 on every nearest-neighbour bond.

    Periodic boundaries wrap (an L=2 ring carries a doubled bond, consistent
    with the plane-wave spectrum); dirichlet drops out-of-box couplings.
    """
    n = spec.site_count
    kin = np.zeros((n, n))
    rows = np.arange(n)
    for axis in range(spec.dimension):
        for step in (+1, -1):
            target = spec.neighbor_shift(axis, step)
            ok = target >= 0
            kin[rows[ok], target[ok]] -= 1.0
    return kin


def build_velocity(spec: LatticeSpec) -> np.ndarray:
    """Velocity operator along axis 0: amplitude -i forward, +i backward.

    Hermitian with purely imaginary entries; independent of any on-site
    potential.
    """
    n = spec.site_count
    vel = np.zeros((n, n), dtype=complex)
    rows = np.arange(n)
    for step, amp in ((+1, -1j), (-1, +1j)):
        target = spec.neighbor_shift(0, step)
        ok = target >= 0
        vel[rows[ok], target[ok]] += amp
    return vel


def build_position(spec: LatticeSpec) -> np.ndarray:
    """Diagonal first-coordinate operator, centred at the box midpoint.

    Only defined on an open box; a torus has no single-valued coordinate.
    """
    if spec.boundary != DIRICHLET:
        raise ValueError("position operator requires dirichlet boundary")
    return np.diag(position_values(spec))


def position_values(spec: LatticeSpec) -> np.ndarray:
    """Centred first coordinates, values in {-(L-1)/2, ..., +(L-1)/2}."""
    if spec.boundary != DIRICHLET:
        raise ValueError("position operator requires dirichlet boundary")
    return spec.coordinates()[:, 0] - (spec.linear_size - 1) / 2.0


def plane_wave_energies(spec: LatticeSpec) -> np.ndarray:
    """Exact periodic kinetic spectrum -2 sum_i cos(2 pi j_i / L), unsorted."""
    if spec.boundary != PERIODIC:
        raise ValueError("plane waves require periodic boundary")
    k = 2.0 * np.pi * spec.coordinates() / spec.linear_size
    return -2.0 * np.cos(k).sum(axis=1)
