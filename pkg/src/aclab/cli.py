"""Command-line surface: sigma, verify, sweep, absorb.

Every command is a pure function of its JSON config (plus the --seed /
--out / --threads overrides), writes write-once artifacts into the output
directory, and exits nonzero with a machine-readable JSON error on any
validation or invariant failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, config as config_mod, io
from .conductivity import conductivity_measure, frequency_bins, pair_spectrum
from .config import ConfigError, RunConfig
from .disorder import spectral_bounds
from .ensemble import disorder_sweep, ensemble_average, temperature_sweep
from .lattice import DIRICHLET, build_laplacian, build_position, build_velocity
from .response import absorbed_energy_lr, absorbed_energy_td, linear_response_extract, \
    propagate_liouville
from .spectral import build_hamiltonian, eigendecompose
from .verify import run_verify


def _fail(message: str, field: str | None = None, code: int = 2) -> int:
    payload = {"status": "error", "message": message}
    if field:
        payload["field"] = field
    print(json.dumps(payload))
    return code


def _load_config(args) -> RunConfig:
    config = config_mod.load(args.config)
    if args.seed is not None:
        config = dataclasses.replace(
            config, disorder=dataclasses.replace(config.disorder, seed=args.seed))
    if args.out is not None:
        config = dataclasses.replace(config, output_dir=str(args.out))
    return config


def cmd_sigma(config: RunConfig, threads: int) -> int:
    result = ensemble_average(config.disorder, config.lattice, config.thermo,
                              bin_edges=_bin_edges(config),
                              n=config.realizations, threads=threads)
    out = Path(config.output_dir)
    io.write_measure_csv(out / "sigma.csv", result.bin_edges,
                         result.sigma_mean, result.sigma_stderr)
    io.write_json(out / "sigma.json", io.measure_header(
        config.to_dict(), "sigma",
        atom_at_zero=result.atom_mean,
        atom_stderr=result.atom_stderr,
        realizations=result.realizations,
        scalars={k: {"mean": v[0], "stderr": v[1]} for k, v in result.scalars.items()},
        code_version=__version__,
    ))
    print(json.dumps({"status": "ok",
                      "files": [str(out / "sigma.csv"), str(out / "sigma.json")]}))
    return 0


def _bin_edges(config: RunConfig):
    bounds = spectral_bounds(config.disorder, config.lattice)
    return frequency_bins(bounds, config.lattice.site_count,
                          bins_per_side=config.bins.frequency_bins_per_side,
                          nu_max=config.bins.nu_max)


def cmd_verify(config: RunConfig, threads: int) -> int:
    report = run_verify(config, threads=threads)
    for line in report.lines():
        print(line)
    out = Path(config.output_dir)
    io.write_json(out / "verify.json", io.measure_header(
        config.to_dict(), "verify", report=report.to_dict(),
        code_version=__version__))
    return 0 if report.passed else 1


def cmd_sweep(config: RunConfig, axis: str, threads: int) -> int:
    out = Path(config.output_dir)
    if axis == "temperature":
        if not config.temperature_grid:
            return _fail("config has no sweeps.temperature grid",
                         field="sweeps.temperature")
        table = temperature_sweep(config.disorder, config.lattice,
                                  config.thermo.fermi_level,
                                  config.temperature_grid,
                                  n=config.realizations, threads=threads)
    else:
        if not config.disorder_grid:
            return _fail("config has no sweeps.disorder grid",
                         field="sweeps.disorder")
        table = disorder_sweep(config.lattice, config.thermo,
                               config.disorder_grid, config.disorder,
                               n=config.realizations, threads=threads)
    io.write_sweep_csv(out / f"sweep_{axis}.csv", table)
    io.write_json(out / f"sweep_{axis}.json", io.measure_header(
        config.to_dict(), f"sweep_{axis}", meta=table.meta,
        assertions=_sweep_assertions(table), code_version=__version__))
    print(json.dumps({"status": "ok", "files": [str(out / f"sweep_{axis}.csv"),
                                                str(out / f"sweep_{axis}.json")]}))
    return 0


def _sweep_assertions(table) -> dict:
    if table.axis == "temperature":
        return {
            "high_t_bound_ok": bool(all(r["high_t_bound_ok"] for r in table.rows)),
            "gamma_positive": bool(all(r["gamma_positive"] for r in table.rows)),
            "sigma_decreasing": bool(np.all(np.diff(table.column("sigma_total_mean")) < 0)),
        }
    out = {"loglog_slope": table.meta.get("loglog_slope")}
    fractions = table.column("near_zero_fraction_mean")
    out["near_zero_fraction_monotone_down_in_lambda"] = bool(
        np.all(np.diff(fractions) <= 0))
    return out


def cmd_absorb(config: RunConfig, threads: int) -> int:
    if config.pulse is None:
        return _fail("absorb requires a pulse section", field="pulse")
    if config.lattice.boundary != DIRICHLET:
        return _fail("time-domain absorption requires dirichlet boundary",
                     field="lattice.boundary")
    lattice = config.lattice
    laplacian = build_laplacian(lattice)
    velocity = build_velocity(lattice)
    from .disorder import sample_potential

    potential = sample_potential(config.disorder.with_index(0), lattice)
    h = build_hamiltonian(lattice, potential, laplacian=laplacian)
    x1 = build_position(lattice)
    bounds = spectral_bounds(config.disorder, lattice)

    alpha = config.dynamics.alphas[0]
    trace = propagate_liouville(h, x1, config.pulse, alpha, config.thermo,
                                dt=config.dynamics.dt,
                                dt_scale=config.dynamics.dt_scale,
                                tail_fraction=config.dynamics.tail_fraction)
    routes = absorbed_energy_td(trace)
    extraction = linear_response_extract(
        h, x1, config.pulse, config.thermo, config.dynamics.alphas,
        dt=config.dynamics.dt, dt_scale=config.dynamics.dt_scale,
        tail_fraction=config.dynamics.tail_fraction)
    data = eigendecompose(h, bounds=bounds)
    ps = pair_spectrum(data, velocity)
    fine = frequency_bins(bounds, lattice.site_count, bins_per_side=4096)
    sigma = conductivity_measure(ps, config.thermo, fine)
    w_lr = absorbed_energy_lr(sigma, config.pulse)

    out = Path(config.output_dir)
    io.write_trace_csv(out / "trace.csv", trace)
    io.write_json(out / "absorb.json", io.measure_header(
        config.to_dict(), "absorb",
        w_current=routes.w_current,
        w_energy=routes.w_energy,
        route_gap=routes.gap,
        w_lin=extraction.w_lin,
        w_lr=w_lr,
        w_lin_vs_w_lr_rel=(extraction.w_lin - w_lr) / w_lr if w_lr else None,
        quadratic_ratios=list(extraction.ratios),
        fit_residual_rel=extraction.residual_rel,
        alphas=list(extraction.alphas),
        w_values=list(extraction.w_values),
        code_version=__version__,
    ))
    print(json.dumps({"status": "ok", "files": [str(out / "trace.csv"),
                                                str(out / "absorb.json")]}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aclab",
        description="Finite-volume conductivity-measure laboratory",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("sigma", "ensemble-averaged conductivity measure"),
        ("verify", "run the full identity/inequality battery"),
        ("sweep", "temperature or disorder sweep"),
        ("absorb", "time-domain absorption against the measure route"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", type=Path, required=True)
        cmd.add_argument("--out", type=Path, default=None,
                         help="override output.directory")
        cmd.add_argument("--threads", type=int, default=1)
        cmd.add_argument("--seed", type=int, default=None,
                         help="override disorder.seed")
        if name == "sweep":
            cmd.add_argument("--axis", choices=["temperature", "disorder"],
                             required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _load_config(args)
        if args.command == "sigma":
            return cmd_sigma(config, args.threads)
        if args.command == "verify":
            return cmd_verify(config, args.threads)
        if args.command == "sweep":
            return cmd_sweep(config, args.axis, args.threads)
        if args.command == "absorb":
            return cmd_absorb(config, args.threads)
        return _fail(f"unknown command {args.command!r}")
    except ConfigError as exc:
        return _fail(str(exc), field=exc.field_path or None)
    except FileExistsError as exc:
        return _fail(str(exc))
    except (ValueError, RuntimeError, OSError) as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    sys.exit(main())
