import numpy as np
import pytest

from aclab import (
    DisorderSpec,
    LatticeSpec,
    build_hamiltonian,
    build_laplacian,
    build_velocity,
    eigendecompose,
    pair_spectrum,
    sample_potential,
    spectral_bounds,
)

MASTER_SEED = 20240811


@pytest.fixture
def two_site():
    """Free 2-site open chain: H = [[0,-1],[-1,0]], spectrum {-1, +1}."""
    lattice = LatticeSpec(dimension=1, linear_size=2, boundary="dirichlet")
    disorder = DisorderSpec(strength=0.0, seed=MASTER_SEED)
    h = build_laplacian(lattice)
    data = eigendecompose(h, bounds=spectral_bounds(disorder, lattice))
    ps = pair_spectrum(data, build_velocity(lattice))
    return lattice, disorder, data, ps


def make_pair_spectrum(lattice, disorder, index=0):
    """One seeded realization, diagonalized, with its velocity pair table."""
    spec = disorder.with_index(index)
    h = build_hamiltonian(lattice, sample_potential(spec, lattice),
                          laplacian=build_laplacian(lattice))
    data = eigendecompose(h, bounds=spectral_bounds(spec, lattice))
    return data, pair_spectrum(data, build_velocity(lattice))


def plane_wave_atom(length, p):
    """Closed-form clean-chain atom: (pi/L) sum_k 4 sin^2(k) (-f)'(-2 cos k)."""
    from aclab import fermi_derivative_neg

    k = 2.0 * np.pi * np.arange(length) / length
    return np.pi / length * np.sum(
        4.0 * np.sin(k) ** 2 * fermi_derivative_neg(-2.0 * np.cos(k), p))
