"""Command-line interface.

Verbs: spectrum, melem, t1, evolve, fit, bootstrap, tls, field, synth.
Global flags: --config, --seed, --levels, --out.  Exit codes: 0 success,
2 validation failure, 3 numerical failure.  Numeric output is printed with
9 significant digits; every output file embeds the config hash.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .circuit import diagonalize, field_dependence, melem_table
from .config import RunConfig, baseline_config, load_config
from .datasets import load_dataset, save_t1_dataset
from .errors import (
    ConvergenceError,
    DegeneracyError,
    DomainError,
    FitError,
    QuadratureError,
    ValidationError,
)
from .fitting import (
    T1FluxTables,
    bootstrap_confidence,
    fit_exponential,
    fit_field_models,
    fit_hamiltonian_spectroscopy,
    fit_normalized_rate,
    fit_t1_composite,
)
from .kinetics import build_rate_matrix, decompose_modes, evolve_populations
from .sweeps import generate_synthetic, run_sweep
from .tls import PhononBath, TlsEnsemble, relaxation_loss_tangent, resonant_loss_tangent
from .util import fmt9

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


def _write_csv(path, columns, rows, config_hash):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(f"# config_hash={config_hash}\n")
        fh.write(f"# version={__version__}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(fmt9(v) for v in row) + "\n")
    return path


def _write_json(path, payload, config_hash):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    def _round(obj):
        if isinstance(obj, float):
            return float(fmt9(obj))
        if isinstance(obj, dict):
            return {k: _round(v) for k, v in obj.items()}
        if isinstance(obj, (list, tuple)):
            return [_round(v) for v in obj]
        if isinstance(obj, np.ndarray):
            return [_round(float(v)) for v in obj]
        return obj

    payload = {"config_hash": config_hash, "version": __version__, **_round(payload)}
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _maybe_plot(path_csv, columns, rows, x_col, y_cols, logy=False):
    """SVG companion to a CSV output; the CSV remains the contract."""
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:  # pragma: no cover
        return None
    rows = np.asarray(rows)
    fig, ax = plt.subplots(figsize=(6, 4))
    xi = columns.index(x_col)
    for name in y_cols:
        ax.plot(rows[:, xi], rows[:, columns.index(name)], label=name)
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(x_col)
    ax.legend(fontsize=7)
    out = Path(path_csv).with_suffix(".svg")
    fig.savefig(out)
    plt.close(fig)
    return out


def _load_run_config(args) -> RunConfig:
    config = load_config(args.config) if args.config else baseline_config()
    if args.seed is not None:
        config.seed = args.seed
    if args.levels is not None:
        config.n_levels = args.levels
    return config


def _out_path(args, default_name) -> Path:
    out = Path(args.out) if args.out else Path.cwd()
    if out.suffix:  # a file path was given
        return out
    return out / default_name


def cmd_spectrum(args):
    config = _load_run_config(args)
    columns = ["phi_ext_phi0"] + [f"f0{j}_hz" for j in range(1, config.n_levels)]
    rows = []
    for phi in config.phi_grid:
        sol = diagonalize(config.circuit.with_phi_ext(2 * np.pi * phi), config.n_levels)
        rows.append([phi] + [sol.frequency(0, j) for j in range(1, config.n_levels)])
    path = _write_csv(_out_path(args, "spectrum.csv"), columns, rows, config.config_hash)
    _maybe_plot(path, columns, rows, "phi_ext_phi0", columns[1:], logy=True)
    print(f"wrote {path}")
    return EXIT_OK


def cmd_melem(args):
    config = _load_run_config(args)
    columns = ["phi_ext_phi0", "f01_hz", "phi01", "n01", "sin01"]
    rows = []
    for phi in config.phi_grid:
        sol = diagonalize(config.circuit.with_phi_ext(2 * np.pi * phi), config.n_levels)
        rows.append(
            [
                phi,
                sol.frequency(0, 1),
                abs(melem_table(sol, "phi")[0, 1]),
                abs(melem_table(sol, "n")[0, 1]),
                abs(melem_table(sol, "sin_half_phi")[0, 1]),
            ]
        )
    path = _write_csv(_out_path(args, "melem.csv"), columns, rows, config.config_hash)
    _maybe_plot(path, columns, rows, "phi_ext_phi0", ["phi01", "n01", "sin01"])
    print(f"wrote {path}")
    return EXIT_OK


def cmd_t1(args):
    config = _load_run_config(args)
    result = run_sweep(config, args.kind)
    path = _write_csv(
        _out_path(args, f"t1_{args.kind}.csv"), result.columns, result.rows, result.config_hash
    )
    y = ["gamma1_total"] + (["gamma1_eff"] if "gamma1_eff" in result.columns else [])
    _maybe_plot(path, list(result.columns), result.rows, "phi_ext_phi0", y, logy=True)
    print(f"wrote {path}")
    return EXIT_OK


def cmd_evolve(args):
    config = _load_run_config(args)
    sol = diagonalize(config.circuit, config.n_levels)
    rm = build_rate_matrix(config.channels, sol, config.n_levels)
    p0 = np.zeros(config.n_levels)
    p0[1] = 1.0
    modes = decompose_modes(rm, p0)
    times = np.geomspace(args.t_min, args.t_max, args.n_times)
    traj = evolve_populations(modes, p0, times)
    columns = ["time_s"] + [f"p{i}" for i in range(config.n_levels)]
    rows = np.column_stack([times, traj.populations.T])
    path = _write_csv(_out_path(args, "evolve.csv"), columns, rows, config.config_hash)
    print(f"wrote {path}")
    print(f"gamma1_eff = {fmt9(modes.gamma1_eff)} 1/s, M = {fmt9(modes.m_metric)}")
    return EXIT_OK


def _fit_report(args, config, result):
    path = _write_json(_out_path(args, f"fit_{args.fit_kind}.json"), result, config.config_hash)
    print(f"wrote {path}")
    return EXIT_OK


def cmd_fit(args):
    config = _load_run_config(args)
    if args.fit_kind == "t1_composite":
        data, report = load_dataset(args.data, "t1_flux")
        _warn_rejected(report)
        free = config.free_parameters()
        result = fit_t1_composite(
            data,
            config.circuit,
            config.channels,
            free,
            level_mode=config.level_mode,
            n_levels=config.n_levels,
        )
        return _fit_report(args, config, result.as_dict())
    if args.fit_kind == "exponential":
        rows = np.loadtxt(args.data, delimiter=",", skiprows=1, comments="#")
        fit = fit_exponential(rows[:, 0], rows[:, 1])
        payload = {
            "amplitude": fit.amplitude,
            "t1_s": fit.t1,
            "offset": fit.offset,
            "rejected": fit.rejected,
            "sigmas": fit.sigmas,
        }
        return _fit_report(args, config, payload)
    if args.fit_kind == "normalized_rate":
        data, report = load_dataset(args.data, "t1_flux")
        _warn_rejected(report)
        tables = T1FluxTables.build(config.circuit, data.phi_ext, n_levels=config.n_levels)
        f01 = tables.omega01 / (2 * np.pi)
        y = (1.0 / data.t1) / tables.melem_sq["n"]
        fit = fit_normalized_rate(f01, y)
        payload = {
            "amplitude": fit.amplitude,
            "mu": fit.mu,
            "offset": fit.offset,
            "offset_fixed_zero": fit.offset_fixed_zero,
            "sigmas": fit.sigmas,
        }
        return _fit_report(args, config, payload)
    if args.fit_kind == "field":
        data, report = load_dataset(args.data, "ej_field")
        _warn_rejected(report)
        fits = fit_field_models(data.field, data.e_j, sigma=data.sigma)
        payload = {
            "fraunhofer": fits.fraunhofer.as_dict(),
            "ginzburg_landau": fits.ginzburg_landau.as_dict(),
        }
        return _fit_report(args, config, payload)
    if args.fit_kind == "spectroscopy":
        data, _ = load_dataset(args.data, "spectroscopy")
        result = fit_hamiltonian_spectroscopy(
            data.phi_ext,
            data.level_i,
            data.level_j,
            data.freq,
            fix_e_c=args.fix_e_c * 1e9 if args.fix_e_c else None,
        )
        return _fit_report(args, config, result.as_dict())
    raise ValidationError(f"unknown fit kind {args.fit_kind!r}")


def cmd_bootstrap(args):
    config = _load_run_config(args)
    data, report = load_dataset(args.data, "t1_flux")
    _warn_rejected(report)
    free = config.free_parameters()
    tables = T1FluxTables.build(config.circuit, data.phi_ext, n_levels=config.n_levels)

    def fit_fn(ds):
        sub_tables = None
        if len(ds) == len(data):
            sub_tables = tables
        else:  # resampled: reindex the cached tables
            idx = _match_indices(data.phi_ext, ds.phi_ext)
            sub_tables = T1FluxTables(
                params=tables.params,
                phi=tables.phi[idx],
                omega01=tables.omega01[idx],
                melem_sq={k: v[idx] for k, v in tables.melem_sq.items()},
            )
        return fit_t1_composite(
            ds, config.circuit, config.channels, free, tables=sub_tables, n_starts=1
        )

    result = bootstrap_confidence(data, fit_fn, n=args.n, seed=config.seed)
    payload = result.as_dict()
    path = _write_json(_out_path(args, "bootstrap.json"), payload, config.config_hash)
    print(f"wrote {path}")
    return EXIT_OK


def _match_indices(full, subset):
    order = {v: i for i, v in enumerate(full)}
    return np.array([order[v] for v in subset], dtype=int)


def cmd_tls(args):
    config = _load_run_config(args)
    ens = TlsEnsemble(
        p_density=args.p_density, dipole=args.dipole, eps_r=args.eps_r, n_c=args.n_c
    )
    bath = PhononBath(
        gamma_elastic=args.gamma_elastic,
        speed=args.speed,
        density_d=args.density,
        dim=args.dim,
    )
    omegas = 2 * np.pi * np.geomspace(args.f_min, args.f_max, args.n_freq)
    columns = ["freq_hz", "tan_delta_resonant", "tan_delta_relaxation"]
    rows = []
    for w in omegas:
        rows.append(
            [
                w / (2 * np.pi),
                resonant_loss_tangent(ens, w, args.n_bar, args.t),
                relaxation_loss_tangent(ens, bath, w, args.t),
            ]
        )
    path = _write_csv(_out_path(args, "tls.csv"), columns, rows, config.config_hash)
    _maybe_plot(path, columns, rows, "freq_hz", columns[1:], logy=True)
    print(f"wrote {path}")
    return EXIT_OK


def cmd_field(args):
    config = _load_run_config(args)
    if config.field_model is None:
        raise ValidationError("the 'field' verb requires a [field_model] table in the config")
    columns = ["field_g", "ej_hz", "gap_j", "delta_x_qp"]
    rows = []
    for b in config.fields:
        fd = field_dependence(config.field_model, b, config.t_eff)
        rows.append([b, fd.e_j, fd.gap, fd.delta_x_qp])
    path = _write_csv(_out_path(args, "field.csv"), columns, rows, config.config_hash)
    print(f"wrote {path}")
    return EXIT_OK


def cmd_synth(args):
    config = _load_run_config(args)
    noise = args.noise_level if args.noise_level is not None else config.noise_level
    ds = generate_synthetic(config, noise_level=noise, seed=config.seed)
    path = _out_path(args, "synthetic_t1.csv")
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    save_t1_dataset(path, ds, comment=f"config_hash={config.config_hash}")
    print(f"wrote {path}")
    return EXIT_OK


def _warn_rejected(report):
    for lineno, reason in report.rejected:
        print(f"rejected row at line {lineno}: {reason}", file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fluxonium-noise",
        description="Fluxonium decoherence modeling: spectrum, loss channels, fits.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML run configuration (default: built-in baseline)")
    common.add_argument("--seed", type=int, default=None, help="override the config seed")
    common.add_argument("--levels", type=int, default=None, help="override the level count")
    common.add_argument("--out", default=None, help="output file or directory")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("spectrum", parents=[common], help="transition frequencies vs flux")
    sub.add_parser("melem", parents=[common], help="matrix elements vs flux")

    p_t1 = sub.add_parser("t1", parents=[common], help="T1 model sweep")
    p_t1.add_argument("--kind", choices=("flux", "temperature", "field"), default="flux")

    p_ev = sub.add_parser("evolve", parents=[common], help="N-level population evolution")
    p_ev.add_argument("--t-min", type=float, default=1e-7)
    p_ev.add_argument("--t-max", type=float, default=1e-2)
    p_ev.add_argument("--n-times", type=int, default=61)

    p_fit = sub.add_parser("fit", parents=[common], help="fit a dataset")
    p_fit.add_argument("--data", required=True)
    p_fit.add_argument(
        "--fit-kind",
        dest="fit_kind",
        choices=("t1_composite", "exponential", "normalized_rate", "field", "spectroscopy"),
        default="t1_composite",
    )
    p_fit.add_argument("--fix-e-c", dest="fix_e_c", type=float, default=None, help="GHz")

    p_bs = sub.add_parser(
        "bootstrap",
        parents=[common],
        help="bootstrap CIs for a composite T1 fit (two-level model, as in field sweeps)",
    )
    p_bs.add_argument("--data", required=True)
    p_bs.add_argument("--n", type=int, default=1000)

    p_tls = sub.add_parser("tls", parents=[common], help="TLS loss-tangent curves")
    p_tls.add_argument("--p-density", type=float, default=1e44)
    p_tls.add_argument("--dipole", type=float, default=1.2e-29)
    p_tls.add_argument("--eps-r", type=float, default=10.0)
    p_tls.add_argument("--n-c", type=float, default=1.0)
    p_tls.add_argument("--n-bar", type=float, default=0.0)
    p_tls.add_argument("--gamma-elastic", type=float, default=1.6e-19)
    p_tls.add_argument("--speed", type=float, default=5000.0)
    p_tls.add_argument("--density", type=float, default=2650.0)
    p_tls.add_argument("--dim", type=int, default=3)
    p_tls.add_argument("--t", type=float, default=0.05)
    p_tls.add_argument("--f-min", type=float, default=1e7)
    p_tls.add_argument("--f-max", type=float, default=1e10)
    p_tls.add_argument("--n-freq", type=int, default=31)

    sub.add_parser("field", parents=[common], help="field dependence of circuit parameters")

    p_sy = sub.add_parser("synth", parents=[common], help="generate a synthetic T1 dataset")
    p_sy.add_argument("--noise-level", type=float, default=None)

    return parser


_COMMANDS = {
    "spectrum": cmd_spectrum,
    "melem": cmd_melem,
    "t1": cmd_t1,
    "evolve": cmd_evolve,
    "fit": cmd_fit,
    "bootstrap": cmd_bootstrap,
    "tls": cmd_tls,
    "field": cmd_field,
    "synth": cmd_synth,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValidationError, DomainError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ConvergenceError, DegeneracyError, FitError, QuadratureError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
