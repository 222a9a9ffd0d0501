"""Command-line interface: ``weakpde simulate|identify|sweep|spectrum|replay``.

Every command reads an optional YAML config (see :mod:`weakpde.config`),
applies flag overrides on top, and writes its output together with a
``<output>.manifest.json`` run manifest. ``weakpde replay MANIFEST`` re-runs a
recorded command with the recorded config.

Exit codes: 0 success, 2 config or usage error, 3 I/O error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
import time
from dataclasses import replace

import numpy as np

from . import __version__
from .config import ConfigError, config_from_dict, config_to_dict, load_config, parse_number
from .domains import half_cells_for, sample_domains
from .experiments import (
    SWEEP_AXES,
    _identifier,
    _trial_seeds,
    load_base_field,
    prepare_field,
    sweep,
    write_sweep_csv,
)
from .field import (
    FieldFormatError,
    add_gaussian_noise,
    downsample,
    mean_windowed_spectrum,
    power_spectrum,
    read_field,
    write_field,
)
from .ks import SimulationError, simulate_ks

logger = logging.getLogger("weakpde")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERICAL = 4

INTEGER_AXES = {"stride", "K", "l", "m", "alpha_beta"}


class NumericalError(RuntimeError):
    pass


# flag dest -> (config section, key)
_SIM_FLAGS = {
    "L_x": "L_x", "n_x": "n_x", "dt": "dt", "T": "T", "seed": "seed",
    "save_stride": "save_stride", "transient": "transient", "n_modes": "n_modes",
    "c4_sine_amplitude": "c4_sine_amplitude",
}
_ANALYSIS_FLAGS = {
    "stride_x": ("data", "stride_x"),
    "stride_t": ("data", "stride_t"),
    "crop_x": ("data", "L_x"),
    "crop_t": ("data", "L_t"),
    "alpha": ("weights", "alpha"),
    "beta": ("weights", "beta"),
    "l": ("weights", "l"),
    "m": ("weights", "m"),
    "F_x": ("domains", "F_x"),
    "F_t": ("domains", "F_t"),
    "domains": ("domains", "count"),
    "gamma": ("regression", "gamma"),
    "reference": ("regression", "reference"),
    "trials": ("ensemble", "trials"),
    "seed": ("ensemble", "seed"),
}


def _resolve_config(args, flags):
    base = load_config(args.config)
    raw = config_to_dict(base)
    for dest, target in flags.items():
        value = getattr(args, dest, None)
        if value is None:
            continue
        section, key = target if isinstance(target, tuple) else ("simulation", target)
        raw[section][key] = value
    if getattr(args, "normalize_columns", False):
        raw["regression"]["normalize_columns"] = True
    if getattr(args, "noise", None) is not None:
        raw["data"]["sigma"] = args.noise
    return config_from_dict(raw)


def _atomic_write_text(path, text: str) -> None:
    tmp = f"{os.fspath(path)}.tmp{os.getpid()}"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _strip_config(argv):
    out, skip = [], False
    for tok in argv:
        if skip:
            skip = False
            continue
        if tok == "--config":
            skip = True
            continue
        if tok.startswith("--config="):
            continue
        out.append(tok)
    return out


def write_manifest(output, command, argv, config, seed, artifacts, timings) -> str:
    """Write ``<output>.manifest.json`` atomically and return its path."""
    path = f"{os.fspath(output)}.manifest.json"
    manifest = {
        "command": command,
        "argv": _strip_config(argv),
        "config": config_to_dict(config),
        "seed": seed,
        "artifacts": {os.fspath(p): _sha256(p) for p in artifacts},
        "version": __version__,
        "timings": timings,
    }
    _atomic_write_text(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _check_output_dir(path) -> None:
    parent = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(parent):
        raise FileNotFoundError(f"output directory does not exist: {parent}")


def cmd_simulate(args, argv) -> int:
    cfg = _resolve_config(args, _SIM_FLAGS)
    _check_output_dir(args.output)
    t0 = time.perf_counter()
    data = simulate_ks(cfg.simulation)
    elapsed = time.perf_counter() - t0
    write_field(data, args.output)
    write_manifest(args.output, "simulate", argv, cfg, cfg.simulation.seed, [args.output],
                   {"simulate_s": elapsed})
    print(f"wrote {args.output}: n_x={data.n_x} n_t={data.n_t} "
          f"L_x={data.L_x:.6g} L_t={data.L_t:.6g}")
    return EXIT_OK


def _model_report(est, data, cfg, sigma, noise_seed, domain_seed) -> dict:
    m = est.model_
    return {
        "equation": est.equation(precision=6),
        "labels": list(est.feature_names_),
        "active": [est.feature_names_[i] for i in m.active_terms],
        "coefficients": est.coefficients_ if est.reference_active_ else None,
        "unit_coefficients": {est.feature_names_[i]: float(c) for i, c in zip(m.active_terms, m.coefficients)},
        "reference": cfg.reference,
        "reference_active": est.reference_active_,
        "residual": m.residual,
        "elimination_trace": [
            {"removed": est.feature_names_[s.removed], "eta_before": s.eta_before,
             "eta_after": s.eta_after, "committed": s.committed}
            for s in m.elimination_trace
        ],
        "warnings": list(m.warnings),
        "grid": {"n_x": data.n_x, "n_t": data.n_t, "delta_x": data.delta_x, "delta_t": data.delta_t},
        "domain_half_cells": list(est.library_.half_cells_),
        "domain_widths": list(est.library_.widths_),
        "n_rows": len(est.library_.domains_) * len(est.library_.weights_),
        "sigma": sigma,
        "noise_seed": noise_seed,
        "domain_seed": domain_seed,
    }


def cmd_identify(args, argv) -> int:
    cfg = _resolve_config(args, _ANALYSIS_FLAGS)
    field_path = args.field or cfg.field_path
    if field_path is None:
        raise ConfigError("identify: no field file given (positional FIELD or data.field)")
    cfg = replace(cfg, field_path=field_path)
    output = args.output or f"{field_path}.model.json"
    _check_output_dir(output)
    t0 = time.perf_counter()
    data = prepare_field(read_field(field_path), cfg)
    if not np.all(np.isfinite(data.values)):
        raise NumericalError(f"{field_path} contains non-finite values")
    noise_seed, domain_seed = _trial_seeds(cfg.seed, 0)
    noisy = add_gaussian_noise(data, args.sigma, noise_seed)
    est = _identifier(cfg, cfg.n_domains, domain_seed).fit(noisy)
    elapsed = time.perf_counter() - t0
    report = _model_report(est, data, cfg, args.sigma, noise_seed, domain_seed)
    _atomic_write_text(output, json.dumps(report, indent=2) + "\n")
    write_manifest(output, "identify", argv, cfg, cfg.seed, [output], {"identify_s": elapsed})
    print(est.equation(precision=args.precision))
    if not est.reference_active_:
        logger.warning("reference term %r was eliminated", cfg.reference)
    return EXIT_OK


def parse_values(text: str, axis: str) -> list:
    """Sweep values from ``"a,b,c"`` or ``"start:stop[:count]"`` (inclusive, ``count`` evenly spaced, default 10)."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) not in (2, 3):
            raise ConfigError(f"--values: expected start:stop[:count], got {text!r}")
        start = parse_number(parts[0], "--values start")
        stop = parse_number(parts[1], "--values stop")
        count = 10 if len(parts) == 2 else int(parse_number(parts[2], "--values count"))
        if count < 1:
            raise ConfigError("--values: count must be positive")
        values = list(np.linspace(start, stop, count)) if count > 1 else [start]
    else:
        values = [parse_number(v, "--values") for v in text.split(",") if v.strip()]
    if not values:
        raise ConfigError("--values: no values given")
    if axis in INTEGER_AXES:
        rounded = [round(v) for v in values]
        if any(abs(r - v) > 1e-9 for r, v in zip(rounded, values)):
            raise ConfigError(f"--values: axis {axis!r} takes integers, got {values}")
        values = list(dict.fromkeys(int(r) for r in rounded))
    else:
        values = [float(v) for v in values]
    return values


def cmd_sweep(args, argv) -> int:
    if args.axis not in SWEEP_AXES:
        raise ConfigError(f"--axis: unknown sweep axis {args.axis!r}; valid axes: {', '.join(SWEEP_AXES)}")
    cfg = _resolve_config(args, _ANALYSIS_FLAGS)
    if args.field is not None:
        cfg = replace(cfg, field_path=args.field)
    values = parse_values(args.values, args.axis)
    _check_output_dir(args.output)
    t0 = time.perf_counter()
    base = load_base_field(cfg, args.cache_dir)
    t_data = time.perf_counter() - t0
    rows = sweep(cfg, args.axis, values, data=base, n_jobs=args.threads)
    t_sweep = time.perf_counter() - t0 - t_data
    write_sweep_csv(rows, args.output)
    write_manifest(args.output, "sweep", argv, cfg, cfg.seed, [args.output],
                   {"data_s": t_data, "sweep_s": t_sweep})
    for value, res in rows:
        s = res.summary()
        print(f"{args.axis}={value}: p_spurious={s['p_spurious']:.3f} p_missing={s['p_missing']:.3f} "
              + " ".join(f"{k}={v:.3e}" for k, v in s["mean_delta_c"].items()))
    return EXIT_OK


def cmd_spectrum(args, argv) -> int:
    cfg = _resolve_config(args, {"seed": ("ensemble", "seed")})
    _check_output_dir(args.output)
    t0 = time.perf_counter()
    data = downsample(read_field(args.field), args.stride_x, args.stride_t)
    if args.windowed:
        hx = half_cells_for(args.F_x if args.F_x is not None else cfg.width_x, data.delta_x)
        ht = half_cells_for(args.F_t if args.F_t is not None else cfg.width_t, data.delta_t)
        doms = sample_domains(args.domains, hx, ht, data.shape, cfg.seed)
        prof = mean_windowed_spectrum(data, doms, args.alpha, args.beta, args.axis)
    else:
        prof = power_spectrum(data, args.axis)
    tmp = f"{args.output}.tmp{os.getpid()}"
    with open(tmp, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["frequency", "power"])
        for f, p in zip(prof.frequencies, prof.power):
            writer.writerow([f"{f:.17e}", f"{p:.17e}"])
    os.replace(tmp, args.output)
    write_manifest(args.output, "spectrum", argv, cfg, cfg.seed, [args.output],
                   {"spectrum_s": time.perf_counter() - t0})
    print(f"peak frequency {prof.peak():.6g}")
    return EXIT_OK


def cmd_replay(args, argv) -> int:
    try:
        with open(args.manifest) as fh:
            manifest = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"manifest: cannot parse {args.manifest}: {exc}") from exc
    if "command" not in manifest or "argv" not in manifest:
        raise ConfigError("manifest: missing 'command' or 'argv'")
    new = list(manifest["argv"]) + ["--config", args.manifest]
    if args.output is not None:
        new += ["--output", args.output]
    return main(new)


def _add_analysis_flags(p):
    g = p.add_argument_group("analysis overrides (defaults come from the config)")
    g.add_argument("--stride-x", dest="stride_x", type=int, help="spatial downsampling stride (default 4)")
    g.add_argument("--stride-t", dest="stride_t", type=int, help="temporal downsampling stride (default 4)")
    g.add_argument("--crop-x", dest="crop_x", type=float, help="crop the data to this spatial extent")
    g.add_argument("--crop-t", dest="crop_t", type=float, help="crop the data to this temporal extent")
    g.add_argument("--alpha", type=int, help="spatial envelope power (default 8)")
    g.add_argument("--beta", type=int, help="temporal envelope power (default 8)")
    g.add_argument("--l", type=int, help="spatial weight frequency index (default 1)")
    g.add_argument("--m", type=int, help="temporal weight frequency index (default 2)")
    g.add_argument("--F-x", dest="F_x", type=float, help="domain width in x (default 14.73)")
    g.add_argument("--F-t", dest="F_t", type=float, help="domain width in t (default 75)")
    g.add_argument("--domains", type=int, help="number of integration domains (default 50; 4 weights each)")
    g.add_argument("--gamma", type=float, help="sparsification threshold (default 1.4)")
    g.add_argument("--reference", help="term normalized to coefficient 1 (default u_t)")
    g.add_argument("--normalize-columns", action="store_true",
                   help="regress on unit-norm library columns")
    g.add_argument("--trials", type=int, help="ensemble size M (default 100)")
    g.add_argument("--seed", type=int, help="master seed for noise and domain placement (default 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="weakpde", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="integrate the KS equation and write a field file")
    p.add_argument("--config", help="YAML config or run manifest")
    p.add_argument("-o", "--output", required=True)
    g = p.add_argument_group("simulation overrides")
    g.add_argument("--L-x", dest="L_x", help="domain length, e.g. 32*pi (default 32*pi)")
    g.add_argument("--n-x", dest="n_x", type=int, help="grid points (default 2048)")
    g.add_argument("--dt", type=float, help="time step (default 0.005)")
    g.add_argument("--T", type=float, help="recorded duration (default 500)")
    g.add_argument("--seed", type=int, help="initial-condition seed (default 0)")
    g.add_argument("--save-stride", dest="save_stride", type=int, help="steps between saved snapshots (default 50)")
    g.add_argument("--transient", type=float, help="discarded spin-up time (default 50)")
    g.add_argument("--n-modes", dest="n_modes", type=int, help="random Fourier modes in u0 (default 4)")
    g.add_argument("--c4-sine-amplitude", dest="c4_sine_amplitude", type=float,
                   help="a in c4(x) = 1 + a sin(2 pi x / L) (default 0)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("identify", help="identify a PDE from a field file")
    p.add_argument("field", nargs="?", help="field file (default: data.field from the config)")
    p.add_argument("--config", help="YAML config or run manifest")
    p.add_argument("-o", "--output", help="model JSON (default FIELD.model.json)")
    p.add_argument("--sigma", type=float, default=0.0,
                   help="relative noise added before identification (default 0)")
    p.add_argument("--precision", type=int, default=3, help="decimals in the printed equation")
    _add_analysis_flags(p)
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("sweep", help="run one ensemble per value of a parameter")
    p.add_argument("--config", help="YAML config or run manifest")
    p.add_argument("--axis", required=True, help=f"one of: {', '.join(SWEEP_AXES)}")
    p.add_argument("--values", required=True, help="'a,b,c' or 'start:stop[:count]'")
    p.add_argument("-o", "--output", required=True, help="CSV output")
    p.add_argument("--field", help="base field file instead of simulating")
    p.add_argument("--sigma", dest="noise", type=float, help="noise level sigma (default 0.03)")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                   help="worker threads (default: all CPUs); results do not depend on it")
    p.add_argument("--cache-dir", help="cache simulated base data here")
    _add_analysis_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("spectrum", help="write the power spectrum of a field as CSV")
    p.add_argument("field")
    p.add_argument("--config", help="YAML config or run manifest")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--axis", choices=["space", "time"], default="space")
    p.add_argument("--stride-x", dest="stride_x", type=int, default=1)
    p.add_argument("--stride-t", dest="stride_t", type=int, default=1)
    p.add_argument("--windowed", action="store_true",
                   help="average windowed spectra over random integration domains")
    p.add_argument("--alpha", type=int, default=8, help="spatial envelope power for --windowed (default 8)")
    p.add_argument("--beta", type=int, default=8, help="temporal envelope power for --windowed (default 8)")
    p.add_argument("--domains", type=int, default=1000, help="domains for --windowed (default 1000)")
    p.add_argument("--F-x", dest="F_x", type=float, help="domain width in x (default from config)")
    p.add_argument("--F-t", dest="F_t", type=float, help="domain width in t (default from config)")
    p.add_argument("--seed", type=int, help="domain placement seed (default 0)")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    p.add_argument("manifest")
    p.add_argument("-o", "--output", help="write to this path instead of the recorded one")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args, argv)
    except (SimulationError, NumericalError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except FieldFormatError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, ValueError, KeyError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
