"""YAML experiment configuration.

A config file has up to eight sections, each optional::

    simulation:   # KS data generation
      L_x: 32*pi
      n_x: 2048
      dt: 0.005
      T: 500
      seed: 0
      save_stride: 50
      transient: 50
    data:
      field: null         # path to a field file; replaces the simulation
      sigma: 0.03
      stride_x: 4
      stride_t: 4
      L_x: null           # crop to this physical extent
      L_t: null
    library: default      # or a list of {prefactor, p, nu_x, nu_t, basis, label}
    weights: {alpha: 8, beta: 8, l: 1, m: 2, parities: null}
    domains: {F_x: 14.73, F_t: 75, count: 50}
    regression: {gamma: 1.4, normalize_columns: false, reference: u_t}
    ensemble: {trials: 100, seed: 0}
    truth: {u_t: 1, u u_x: 1, u_xx: 1, u_xxxx: 1}

A run manifest (JSON) is also accepted; its ``config`` entry is used.
"""

from __future__ import annotations

import math
import re

import yaml

from .experiments import ExperimentConfig, build_library
from .ks import SimulationConfig
from .terms import KS_TRUTH
from .weights import enumerate_weight_set

__all__ = ["ConfigError", "load_config", "config_from_dict", "config_to_dict", "parse_number"]


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


_PI_RE = re.compile(r"^\s*([-+0-9.eE]*)\s*\*?\s*pi\s*$")


def parse_number(value, name: str) -> float:
    """Float from a number or a string such as ``"32*pi"``."""
    if isinstance(value, bool):
        raise ConfigError(f"{name}: expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        mt = _PI_RE.match(value)
        if mt:
            coef = mt.group(1)
            try:
                return (float(coef) if coef not in ("", "+", "-") else float(coef + "1")) * math.pi
            except ValueError:
                pass
        try:
            return float(value)
        except ValueError:
            pass
    raise ConfigError(f"{name}: expected a number, got {value!r}")


def _int(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
        raise ConfigError(f"{name}: expected an integer, got {value!r}")
    return int(value)


_SECTIONS = {
    "simulation": {"L_x", "n_x", "dt", "T", "seed", "save_stride", "transient", "n_modes", "c4_sine_amplitude"},
    "data": {"field", "sigma", "stride_x", "stride_t", "L_x", "L_t"},
    "weights": {"alpha", "beta", "l", "m", "parities"},
    "domains": {"F_x", "F_t", "count"},
    "regression": {"gamma", "normalize_columns", "reference"},
    "ensemble": {"trials", "seed"},
}
_TOP = set(_SECTIONS) | {"library", "truth"}


def _section(raw: dict, name: str) -> dict:
    sec = raw.get(name) or {}
    if not isinstance(sec, dict):
        raise ConfigError(f"{name}: expected a mapping, got {type(sec).__name__}")
    unknown = set(sec) - _SECTIONS[name]
    if unknown:
        raise ConfigError(f"{name}.{sorted(unknown)[0]}: unknown key")
    return sec


def config_from_dict(raw: dict | None) -> ExperimentConfig:
    """Validate a parsed config mapping and build an :class:`ExperimentConfig`."""
    raw = raw or {}
    if not isinstance(raw, dict):
        raise ConfigError("config: expected a mapping at the top level")
    unknown = set(raw) - _TOP
    if unknown:
        raise ConfigError(f"{sorted(unknown)[0]}: unknown section")

    sim = _section(raw, "simulation")
    sim_kwargs = {}
    for key, value in sim.items():
        name = f"simulation.{key}"
        if key in ("n_x", "seed", "save_stride", "n_modes"):
            sim_kwargs[key] = _int(value, name)
        else:
            sim_kwargs[key] = parse_number(value, name)
    try:
        simulation = SimulationConfig(**sim_kwargs)
    except ValueError as exc:
        raise ConfigError(f"simulation: {exc}") from exc

    kwargs = {"simulation": simulation}
    data = _section(raw, "data")
    if data.get("field") is not None:
        kwargs["field_path"] = str(data["field"])
    if "sigma" in data:
        kwargs["sigma"] = parse_number(data["sigma"], "data.sigma")
    for key in ("stride_x", "stride_t"):
        if key in data:
            kwargs[key] = _int(data[key], f"data.{key}")
    for key in ("L_x", "L_t"):
        if data.get(key) is not None:
            kwargs[key] = parse_number(data[key], f"data.{key}")

    lib = raw.get("library", "default")
    if lib not in (None, "default"):
        if not isinstance(lib, list):
            raise ConfigError("library: expected 'default' or a list of terms")
        try:
            build_library(lib)
        except ValueError as exc:
            raise ConfigError(f"library: {exc}") from exc
        kwargs["library"] = tuple(tuple(sorted(dict(t).items())) for t in lib)

    w = _section(raw, "weights")
    for key in ("alpha", "beta", "l", "m"):
        if key in w:
            kwargs[key] = _int(w[key], f"weights.{key}")
    if w.get("parities") is not None:
        try:
            kwargs["parities"] = tuple((str(a), str(b)) for a, b in w["parities"])
        except (TypeError, ValueError):
            raise ConfigError("weights.parities: expected a list of [parity_x, parity_t] pairs") from None

    dom = _section(raw, "domains")
    if "F_x" in dom:
        kwargs["width_x"] = parse_number(dom["F_x"], "domains.F_x")
    if "F_t" in dom:
        kwargs["width_t"] = parse_number(dom["F_t"], "domains.F_t")
    if "count" in dom:
        kwargs["n_domains"] = _int(dom["count"], "domains.count")

    reg = _section(raw, "regression")
    if "gamma" in reg:
        kwargs["gamma"] = parse_number(reg["gamma"], "regression.gamma")
    if "normalize_columns" in reg:
        kwargs["normalize_columns"] = bool(reg["normalize_columns"])
    if "reference" in reg:
        kwargs["reference"] = str(reg["reference"])

    ens = _section(raw, "ensemble")
    if "trials" in ens:
        kwargs["n_trials"] = _int(ens["trials"], "ensemble.trials")
    if "seed" in ens:
        kwargs["seed"] = _int(ens["seed"], "ensemble.seed")

    truth = raw.get("truth")
    if truth is not None:
        if not isinstance(truth, dict) or not truth:
            raise ConfigError("truth: expected a non-empty mapping of term label to coefficient")
        kwargs["truth"] = tuple((str(k), parse_number(v, f"truth.{k}")) for k, v in truth.items())
    else:
        kwargs["truth"] = tuple(KS_TRUTH.items())

    try:
        cfg = ExperimentConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    try:
        enumerate_weight_set(cfg.alpha, cfg.beta, cfg.l, cfg.m, cfg.parities)
    except ValueError as exc:
        raise ConfigError(f"weights: {exc}") from exc
    return cfg


def config_to_dict(cfg: ExperimentConfig) -> dict:
    """Inverse of :func:`config_from_dict`, in the file layout."""
    sim = cfg.simulation.to_dict()
    return {
        "simulation": sim,
        "data": {
            "field": cfg.field_path, "sigma": cfg.sigma,
            "stride_x": cfg.stride_x, "stride_t": cfg.stride_t,
            "L_x": cfg.L_x, "L_t": cfg.L_t,
        },
        "library": "default" if cfg.library is None else [dict(t) for t in cfg.library],
        "weights": {
            "alpha": cfg.alpha, "beta": cfg.beta, "l": cfg.l, "m": cfg.m,
            "parities": None if cfg.parities is None else [list(p) for p in cfg.parities],
        },
        "domains": {"F_x": cfg.width_x, "F_t": cfg.width_t, "count": cfg.n_domains},
        "regression": {"gamma": cfg.gamma, "normalize_columns": cfg.normalize_columns,
                       "reference": cfg.reference},
        "ensemble": {"trials": cfg.n_trials, "seed": cfg.seed},
        "truth": dict(cfg.truth),
    }


def load_config(path) -> ExperimentConfig:
    """Load a YAML config file, or the config snapshot inside a JSON run manifest."""
    if path is None:
        return ExperimentConfig()
    with open(path) as fh:
        text = fh.read()
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config: cannot parse {path}: {exc}") from exc
    if isinstance(raw, dict) and "config" in raw and "command" in raw:
        raw = raw["config"]
    return config_from_dict(raw)
