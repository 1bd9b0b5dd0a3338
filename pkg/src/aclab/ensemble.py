"""Disorder averaging and the parameter sweeps that expose the limit trends.

All reductions run over realizations in index order, so results are
independent of worker count and execution order (fixed floating-point
association; documented tolerance 1e-12 on totals).  Sweeps share random
numbers across grid points: the potential of realization i is the same raw
draw at every grid value, scaled by the local disorder strength.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .conductivity import (
    MeasureHistogram,
    conductivity_measure,
    frequency_bins,
    pair_spectrum,
    psi_diagonal,
    upsilon_measure,
)
from .disorder import DisorderSpec, sample_potential, spectral_bounds
from .lattice import LatticeSpec, build_laplacian, build_velocity
from .spectral import build_hamiltonian, eigendecompose
from .thermo import ThermoParams

SCALAR_KEYS = (
    "sigma_total",
    "atom_mass",
    "gamma_mass",
    "upsilon_total",
    "psi_total",
    "near_zero_mass",
    "near_zero_fraction",
)


@dataclass(frozen=True)
class RealizationMeasures:
    """Per-realization frequency measures plus their scalar summaries."""

    index: int
    sigma: MeasureHistogram
    upsilon: MeasureHistogram
    psi: MeasureHistogram
    scalars: dict


@dataclass(frozen=True)
class EnsembleResult:
    """Mean and unbiased standard error over N independent realizations."""

    bin_edges: np.ndarray
    realizations: int
    sigma_mean: np.ndarray
    sigma_stderr: np.ndarray
    atom_mean: float
    atom_stderr: float
    upsilon_mean: np.ndarray
    scalars: dict  # name -> (mean, stderr)


@dataclass
class SweepTable:
    """One row of scalar summaries per grid point, plus sweep-level findings."""

    axis: str
    grid: np.ndarray
    rows: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def column(self, key: str) -> np.ndarray:
        return np.array([row[key] for row in self.rows])


def realization_pair_spectrum(lattice: LatticeSpec, spec: DisorderSpec,
                              laplacian: np.ndarray, velocity: np.ndarray):
    """Sample one potential, diagonalize, and tabulate the velocity pairs."""
    potential = sample_potential(spec, lattice)
    h = build_hamiltonian(lattice, potential, laplacian=laplacian)
    data = eigendecompose(h, bounds=spectral_bounds(spec, lattice))
    return pair_spectrum(data, velocity)


def _measures_for(ps, p: ThermoParams, bin_edges: np.ndarray,
                  index: int) -> RealizationMeasures:
    sigma = conductivity_measure(ps, p, bin_edges)
    upsilon = upsilon_measure(ps, bin_edges)
    psi = psi_diagonal(ps)
    near = sigma.near_zero_mass()
    total = sigma.total()
    scalars = {
        "sigma_total": total,
        "atom_mass": sigma.atom_at_zero,
        "gamma_mass": sigma.binned_total(),
        "upsilon_total": upsilon.total(),
        "psi_total": psi.total(),
        "near_zero_mass": near,
        "near_zero_fraction": near / total if total > 0 else 0.0,
    }
    return RealizationMeasures(index=index, sigma=sigma, upsilon=upsilon,
                               psi=psi, scalars=scalars)


def _map_indices(worker, n: int, threads: int) -> list:
    if threads <= 1:
        return [worker(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(worker, range(n)))


def _mean_stderr(values: np.ndarray) -> tuple:
    n = len(values)
    mean = values.mean(axis=0)
    stderr = values.std(axis=0, ddof=1) / np.sqrt(n) if n > 1 else np.zeros_like(mean)
    return mean, stderr


def ensemble_average(spec: DisorderSpec, lattice: LatticeSpec, p: ThermoParams,
                     bin_edges: np.ndarray | None = None, n: int = 32,
                     threads: int = 1) -> EnsembleResult:
    """Average the conductivity measure over realizations 0..n-1 of the stream."""
    if n < 2:
        raise ValueError("ensemble_average needs n >= 2 for a standard error")
    bounds = spectral_bounds(spec, lattice)
    if bin_edges is None:
        bin_edges = frequency_bins(bounds, lattice.site_count)
    laplacian = build_laplacian(lattice)
    velocity = build_velocity(lattice)

    def worker(i: int) -> RealizationMeasures:
        ps = realization_pair_spectrum(lattice, spec.with_index(i), laplacian, velocity)
        return _measures_for(ps, p, bin_edges, i)

    results = _map_indices(worker, n, threads)
    sigma_stack = np.array([r.sigma.bin_mass for r in results])
    atom_stack = np.array([r.sigma.atom_at_zero for r in results])
    upsilon_stack = np.array([r.upsilon.bin_mass for r in results])
    sigma_mean, sigma_stderr = _mean_stderr(sigma_stack)
    atom_mean, atom_stderr = _mean_stderr(atom_stack)
    scalars = {}
    for key in SCALAR_KEYS:
        mean, stderr = _mean_stderr(np.array([r.scalars[key] for r in results]))
        scalars[key] = (float(mean), float(stderr))
    return EnsembleResult(
        bin_edges=np.asarray(bin_edges, dtype=float),
        realizations=n,
        sigma_mean=sigma_mean,
        sigma_stderr=sigma_stderr,
        atom_mean=float(atom_mean),
        atom_stderr=float(atom_stderr),
        upsilon_mean=upsilon_stack.mean(axis=0),
        scalars=scalars,
    )


def temperature_sweep(spec: DisorderSpec, lattice: LatticeSpec, fermi_level: float,
                      t_grid, bin_edges: np.ndarray | None = None, n: int = 32,
                      threads: int = 1) -> SweepTable:
    """Scalar summaries versus temperature, with the per-realization bounds enforced.

    Pair spectra are computed once and reused at every grid point (common
    random numbers).  At each T the per-realization inequalities
    Sigma(R) <= (pi/4T)(Upsilon(R) + Psi(R)) and Gamma(R) > 0 are checked and
    their outcomes recorded per row.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if len(t_grid) < 1 or np.any(t_grid <= 0) or np.any(np.diff(t_grid) <= 0):
        raise ValueError("temperature grid must be positive and strictly increasing")
    bounds = spectral_bounds(spec, lattice)
    if bin_edges is None:
        bin_edges = frequency_bins(bounds, lattice.site_count)
    laplacian = build_laplacian(lattice)
    velocity = build_velocity(lattice)
    spectra = _map_indices(
        lambda i: realization_pair_spectrum(lattice, spec.with_index(i), laplacian, velocity),
        n, threads)

    upsilon_tot = np.array([upsilon_measure(ps, bin_edges).total() for ps in spectra])
    psi_tot = np.array([psi_diagonal(ps).total() for ps in spectra])

    table = SweepTable(axis="temperature", grid=t_grid,
                       meta={"realizations": n, "fermi_level": fermi_level})
    for t_value in t_grid:
        p = ThermoParams(temperature=float(t_value), fermi_level=fermi_level)
        sigma_tot, gamma_tot, atom = [], [], []
        for ps in spectra:
            sigma = conductivity_measure(ps, p, bin_edges)
            sigma_tot.append(sigma.total())
            gamma_tot.append(sigma.binned_total())
            atom.append(sigma.atom_at_zero)
        sigma_tot = np.array(sigma_tot)
        gamma_tot = np.array(gamma_tot)
        envelope = np.pi / (4.0 * t_value) * (upsilon_tot + psi_tot)
        slack = 1e-12 * np.maximum(envelope, 1.0)
        s_mean, s_err = _mean_stderr(sigma_tot)
        g_mean, g_err = _mean_stderr(gamma_tot)
        table.rows.append({
            "temperature": float(t_value),
            "sigma_total_mean": float(s_mean),
            "sigma_total_stderr": float(s_err),
            "gamma_mass_mean": float(g_mean),
            "gamma_mass_stderr": float(g_err),
            "atom_mass_mean": float(np.mean(atom)),
            "t_times_sigma": float(t_value * s_mean),
            "envelope_mean": float(np.pi / 4.0 * np.mean(upsilon_tot + psi_tot)),
            "high_t_bound_ok": bool(np.all(sigma_tot <= envelope + slack)),
            "gamma_positive": bool(np.all(gamma_tot > 0.0)),
        })
    return table


def disorder_sweep(lattice: LatticeSpec, p: ThermoParams, lambda_grid,
                   base_spec: DisorderSpec, bin_edges: np.ndarray | None = None,
                   n: int = 32, threads: int = 1) -> SweepTable:
    """Scalar summaries versus disorder strength on a lambda-common bin grid.

    Raw draws are shared across grid points (only the scale changes), and the
    bins come from the largest strength in the grid so the near-zero window is
    the same at every point.  The log-log slope of the mean total mass over
    the positive grid points is reported, never asserted.
    """
    lambda_grid = np.asarray(lambda_grid, dtype=float)
    if len(lambda_grid) < 1 or np.any(lambda_grid < 0) or np.any(np.diff(lambda_grid) <= 0):
        raise ValueError("disorder grid must be nonnegative and strictly increasing")
    if p.temperature <= 0:
        raise ValueError("disorder sweep requires T > 0")
    top_bounds = spectral_bounds(base_spec.with_strength(float(lambda_grid[-1])), lattice)
    if bin_edges is None:
        bin_edges = frequency_bins(top_bounds, lattice.site_count)
    laplacian = build_laplacian(lattice)
    velocity = build_velocity(lattice)

    table = SweepTable(axis="disorder", grid=lambda_grid,
                       meta={"realizations": n, "temperature": p.temperature,
                             "fermi_level": p.fermi_level})
    for strength in lambda_grid:
        spec = base_spec.with_strength(float(strength))

        def worker(i: int) -> RealizationMeasures:
            ps = realization_pair_spectrum(lattice, spec.with_index(i),
                                           laplacian, velocity)
            return _measures_for(ps, p, bin_edges, i)

        results = _map_indices(worker, n, threads)
        row = {"strength": float(strength)}
        for key in SCALAR_KEYS:
            mean, stderr = _mean_stderr(np.array([r.scalars[key] for r in results]))
            row[f"{key}_mean"] = float(mean)
            row[f"{key}_stderr"] = float(stderr)
        table.rows.append(row)

    positive = lambda_grid > 0
    totals = table.column("sigma_total_mean")[positive]
    if positive.sum() >= 2 and np.all(totals > 0):
        slope = np.polyfit(np.log(lambda_grid[positive]), np.log(totals), 1)[0]
        table.meta["loglog_slope"] = float(slope)
    return table
