"""Seeded ensembles, accuracy metrics, parameter sweeps and scaling fits."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import os
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction

import numpy as np
from joblib import Parallel, delayed
from scipy import stats

from .estimators import WeakPDEIdentifier
from .field import Field2D, add_gaussian_noise, crop, downsample, read_field, write_field
from .ks import SimulationConfig, simulate_ks
from .terms import KS_TRUTH, MonomialTerm, expand_variable_coefficient, parse_basis
from .weights import enumerate_weight_set

__all__ = [
    "ExperimentConfig",
    "TrialResult",
    "EnsembleResult",
    "SWEEP_AXES",
    "build_library",
    "load_base_field",
    "prepare_field",
    "coefficient_errors",
    "support_stats",
    "run_trial",
    "run_ensemble",
    "sweep",
    "write_sweep_csv",
    "fit_loglog_slope",
    "expected_discretization_exponent",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to replay an ensemble of identification trials.

    The base data is either simulated from ``simulation`` or read from
    ``field_path``. It is downsampled by ``stride_x``/``stride_t``, optionally
    cropped to physical extents ``L_x``/``L_t``, then receives noise of
    relative level ``sigma`` independently in each trial.
    """

    simulation: SimulationConfig = field(default_factory=SimulationConfig)
    field_path: str | None = None
    sigma: float = 0.03
    stride_x: int = 4
    stride_t: int = 4
    L_x: float | None = None
    L_t: float | None = None
    library: tuple | None = None
    alpha: int = 8
    beta: int = 8
    l: int = 1
    m: int = 2
    parities: tuple | None = None
    width_x: float = 14.73
    width_t: float = 75.0
    n_domains: int = 50
    gamma: float = 1.4
    normalize_columns: bool = False
    n_trials: int = 100
    seed: int = 0
    reference: str = "u_t"
    truth: tuple = tuple(KS_TRUTH.items())

    def __post_init__(self):
        if self.n_trials < 1:
            raise ValueError(f"n_trials must be at least 1, got {self.n_trials}")
        if self.sigma < 0:
            raise ValueError(f"sigma must be non-negative, got {self.sigma}")
        if not self.gamma > 1:
            raise ValueError(f"gamma must be greater than 1, got {self.gamma}")
        if self.n_domains < 1:
            raise ValueError(f"n_domains must be positive, got {self.n_domains}")
        if isinstance(self.truth, dict):
            object.__setattr__(self, "truth", tuple(self.truth.items()))

    @property
    def truth_map(self) -> dict:
        return dict(self.truth)

    @property
    def n_weights(self) -> int:
        return len(enumerate_weight_set(self.alpha, self.beta, self.l, self.m, self.parities))

    @property
    def n_rows(self) -> int:
        return self.n_domains * self.n_weights

    def to_dict(self) -> dict:
        d = asdict(self)
        d["truth"] = dict(self.truth)
        d["library"] = [dict(t) for t in self.library] if self.library is not None else None
        d["parities"] = [list(p) for p in self.parities] if self.parities is not None else None
        return d


def build_library(spec):
    """Terms from config entries ``{prefactor, p, nu_x, nu_t, basis, label}``; ``None`` means the KS default."""
    if spec is None:
        return None
    terms = []
    for i, entry in enumerate(spec):
        entry = dict(entry)
        try:
            pref = entry.get("prefactor", 1)
            pref = Fraction(pref) if isinstance(pref, str) else pref
            term = MonomialTerm(
                prefactor=pref,
                power_p=int(entry.get("p", 1)),
                nu_x=int(entry.get("nu_x", 0)),
                nu_t=int(entry.get("nu_t", 0)),
                label=entry.get("label"),
            )
        except (TypeError, ValueError) as exc:
            raise ValueError(f"library entry {i}: {exc}") from exc
        basis = entry.get("basis")
        if basis is None:
            terms.append(term)
        else:
            bases = basis if isinstance(basis, (list, tuple)) else [basis]
            terms.extend(expand_variable_coefficient(term, [parse_basis(b) for b in bases]))
    return terms


def _simulation_key(sim: SimulationConfig) -> str:
    blob = json.dumps(sim.to_dict(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def load_base_field(config: ExperimentConfig, cache_dir=None) -> Field2D:
    """Read ``field_path`` or run the simulation, reusing a cached file when available."""
    if config.field_path is not None:
        return read_field(config.field_path)
    if cache_dir is None:
        return simulate_ks(config.simulation)
    path = os.path.join(os.fspath(cache_dir), f"ks-{_simulation_key(config.simulation)}.fld")
    if os.path.exists(path):
        return read_field(path)
    os.makedirs(cache_dir, exist_ok=True)
    logger.info("simulating KS data into %s", path)
    data = simulate_ks(config.simulation)
    write_field(data, path)
    return data


def prepare_field(base: Field2D, config: ExperimentConfig) -> Field2D:
    """Downsample, then crop to the configured physical extents starting at the origin."""
    out = downsample(base, config.stride_x, config.stride_t)
    if config.L_x is not None or config.L_t is not None:
        n_x = out.n_x if config.L_x is None else int(round(config.L_x / out.delta_x)) + 1
        n_t = out.n_t if config.L_t is None else int(round(config.L_t / out.delta_t)) + 1
        out = crop(out, n_x, n_t)
    return out


def coefficient_errors(model: dict, truth: dict):
    """Relative coefficient errors ``|c - c_true| / |c_true|`` for every true term.

    ``model`` maps term labels to coefficients already normalized to the
    reference term. Returns ``(errors, missing)``; a missing true term gets an
    error of 1 and is listed in ``missing``.
    """
    if not truth:
        raise ValueError("truth must name at least one term")
    errors, missing = {}, []
    for label, c_true in truth.items():
        if label in model and model[label] != 0:
            errors[label] = abs((model[label] - c_true) / c_true)
        else:
            errors[label] = 1.0
            missing.append(label)
    return errors, missing


@dataclass
class TrialResult:
    index: int
    active: list = field(default_factory=list)
    coefficients: dict = field(default_factory=dict)
    delta_c: dict = field(default_factory=dict)
    spurious: bool = False
    missing: bool = False
    residual: float = float("nan")
    error: str | None = None

    @property
    def exact(self) -> bool:
        return self.error is None and not self.spurious and not self.missing


def support_stats(trials, truth) -> tuple[float, float]:
    """Fractions of trials with at least one spurious term, and with at least one missing term."""
    trials = list(trials)
    if not trials:
        raise ValueError("no trials")
    truth = set(truth)
    spurious = sum(bool(set(t.active) - truth) for t in trials)
    missing = sum(bool(truth - set(t.active)) for t in trials)
    return spurious / len(trials), missing / len(trials)


@dataclass
class EnsembleResult:
    """Per-trial outcomes plus summary statistics over the trials with the correct support."""

    config: ExperimentConfig
    trials: list

    @property
    def truth(self) -> dict:
        return self.config.truth_map

    @property
    def error_terms(self) -> list:
        return [k for k in self.truth if k != self.config.reference]

    @property
    def valid(self) -> list:
        return [t for t in self.trials if t.exact]

    @property
    def failures(self) -> list:
        return [t for t in self.trials if t.error is not None]

    @property
    def support(self) -> tuple[float, float]:
        return support_stats(self.trials, self.truth)

    @property
    def p_spurious(self) -> float:
        return self.support[0]

    @property
    def p_missing(self) -> float:
        return self.support[1]

    def delta_c(self, label: str) -> np.ndarray:
        return np.array([t.delta_c[label] for t in self.valid])

    def mean_delta_c(self, label: str) -> float:
        vals = self.delta_c(label)
        return float(vals.mean()) if vals.size else float("nan")

    def ci_halfwidth(self, label: str, level: float = 0.95):
        """Student-t half-width of the mean; ``None`` with fewer than 2 valid trials."""
        vals = self.delta_c(label)
        if vals.size < 2:
            return None
        q = stats.t.ppf(0.5 + level / 2, df=vals.size - 1)
        return float(q * vals.std(ddof=1) / math.sqrt(vals.size))

    def summary(self) -> dict:
        return {
            "M": len(self.trials),
            "n_valid": len(self.valid),
            "p_spurious": self.p_spurious,
            "p_missing": self.p_missing,
            "mean_delta_c": {k: self.mean_delta_c(k) for k in self.error_terms},
            "ci_halfwidth": {k: self.ci_halfwidth(k) for k in self.error_terms},
        }


def _trial_seeds(master: int, index: int) -> tuple[int, int]:
    noise, domains = np.random.SeedSequence(master, spawn_key=(index,)).spawn(2)
    return int(noise.generate_state(1)[0]), int(domains.generate_state(1)[0])


def _identifier(config: ExperimentConfig, n_domains: int, random_state) -> WeakPDEIdentifier:
    return WeakPDEIdentifier(
        library=build_library(config.library),
        alpha=config.alpha, beta=config.beta, l=config.l, m=config.m,
        parities=config.parities,
        width_x=config.width_x, width_t=config.width_t,
        n_domains=n_domains,
        gamma=config.gamma,
        normalize_columns=config.normalize_columns,
        reference=config.reference,
        random_state=random_state,
    )


def run_trial(data: Field2D, config: ExperimentConfig, index: int) -> TrialResult:
    """One noise realization and one domain placement, seeded from ``(config.seed, index)``."""
    noise_seed, domain_seed = _trial_seeds(config.seed, index)
    result = TrialResult(index)
    try:
        noisy = add_gaussian_noise(data, config.sigma, noise_seed)
        est = _identifier(config, config.n_domains, domain_seed).fit(noisy)
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        result.error = f"{type(exc).__name__}: {exc}"
        return result
    truth = config.truth_map
    result.active = [est.feature_names_[i] for i in np.flatnonzero(est.support_)]
    result.residual = est.model_.residual
    result.spurious = bool(set(result.active) - set(truth))
    result.missing = bool(set(truth) - set(result.active))
    if est.reference_active_:
        result.coefficients = est.coefficients_
        result.delta_c, _ = coefficient_errors(result.coefficients, truth)
    else:
        result.delta_c = {k: 1.0 for k in truth}
    return result


def run_ensemble(config: ExperimentConfig, data: Field2D | None = None, n_jobs: int = 1,
                 cache_dir=None) -> EnsembleResult:
    """Run ``config.n_trials`` independent trials.

    ``data`` is the base field before downsampling and cropping; when omitted
    it is loaded with :func:`load_base_field`. Results do not depend on
    ``n_jobs``.
    """
    base = data if data is not None else load_base_field(config, cache_dir)
    prepared = prepare_field(base, config)
    if n_jobs == 1:
        trials = [run_trial(prepared, config, i) for i in range(config.n_trials)]
    else:
        trials = Parallel(n_jobs=n_jobs, prefer="threads")(
            delayed(run_trial)(prepared, config, i) for i in range(config.n_trials)
        )
    for t in trials:
        if t.error is not None:
            logger.warning("trial %d failed: %s", t.index, t.error)
    return EnsembleResult(config, list(trials))


def _rows_preserving(config: ExperimentConfig, **changes) -> ExperimentConfig:
    new = replace(config, **changes)
    n_domains = max(1, int(round(config.n_rows / new.n_weights)))
    return replace(new, n_domains=n_domains)


def _apply_sigma(c, v):
    return replace(c, sigma=float(v))


def _apply_gamma(c, v):
    return replace(c, gamma=float(v))


def _apply_stride(c, v):
    return replace(c, stride_x=int(v), stride_t=int(v))


def _apply_K(c, v):
    return replace(c, n_domains=max(1, int(round(float(v) / c.n_weights))))


def _apply_alpha_beta(c, v):
    return replace(c, alpha=int(v), beta=int(v))


SWEEP_AXES = {
    "sigma": _apply_sigma,
    "gamma": _apply_gamma,
    "stride": _apply_stride,
    "K": _apply_K,
    "F_x": lambda c, v: replace(c, width_x=float(v)),
    "F_t": lambda c, v: replace(c, width_t=float(v)),
    "L_x": lambda c, v: replace(c, L_x=float(v)),
    "L_t": lambda c, v: replace(c, L_t=float(v)),
    "l": lambda c, v: _rows_preserving(c, l=int(v)),
    "m": lambda c, v: _rows_preserving(c, m=int(v)),
    "alpha_beta": _apply_alpha_beta,
}


def sweep(config: ExperimentConfig, axis: str, values, data: Field2D | None = None,
          n_jobs: int = 1, cache_dir=None):
    """One ensemble per value of ``axis`` with everything else held fixed.

    Sweeping ``l`` or ``m`` rescales the domain count so the number of library
    rows stays that of ``config``.

    Returns
    -------
    list of (value, EnsembleResult)
    """
    if axis not in SWEEP_AXES:
        raise KeyError(f"unknown sweep axis {axis!r}; valid axes: {', '.join(SWEEP_AXES)}")
    base = data if data is not None else load_base_field(config, cache_dir)
    out = []
    for v in values:
        cfg = SWEEP_AXES[axis](config, v)
        logger.info("sweep %s=%s", axis, v)
        out.append((v, run_ensemble(cfg, base, n_jobs=n_jobs)))
    return out


def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "nan"
    return f"{float(x):.17e}"


SWEEP_CSV_HEADER = ["value", "term", "mean_delta_c", "ci_halfwidth", "p_spurious", "p_missing", "M"]


def write_sweep_csv(rows, path) -> None:
    """One CSV line per (sweep value, term)."""
    tmp = f"{os.fspath(path)}.tmp{os.getpid()}"
    with open(tmp, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_CSV_HEADER)
        for value, res in rows:
            p_s, p_m = res.support
            for label in res.error_terms:
                writer.writerow([
                    _fmt(value), label, _fmt(res.mean_delta_c(label)),
                    _fmt(res.ci_halfwidth(label)), _fmt(p_s), _fmt(p_m), len(res.trials),
                ])
    os.replace(tmp, path)


def fit_loglog_slope(xs, ys) -> tuple[float, float]:
    """Least-squares slope of ``log y`` against ``log x`` and its standard error."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise ValueError("xs and ys must be 1D arrays of equal length")
    if xs.size < 3:
        raise ValueError(f"need at least 3 points, got {xs.size}")
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise ValueError("log-log fit needs strictly positive values")
    fit = stats.linregress(np.log(xs), np.log(ys))
    return float(fit.slope), float(fit.stderr)


def expected_discretization_exponent(alpha: int, beta: int, nu_x: int, nu_t: int) -> int:
    """Order in ``h`` of the trapezoid-rule error of a library entry.

    With ``mu = min(alpha - nu_x, beta - nu_t)`` the error goes as
    ``h**(mu + 2)`` for even ``mu`` and ``h**(mu + 1)`` for odd ``mu``.
    """
    if nu_x < 0 or nu_t < 0 or alpha < nu_x or beta < nu_t:
        raise ValueError(
            f"need alpha >= nu_x >= 0 and beta >= nu_t >= 0, got "
            f"alpha={alpha}, beta={beta}, nu_x={nu_x}, nu_t={nu_t}"
        )
    mu = min(alpha - nu_x, beta - nu_t)
    return mu + 2 if mu % 2 == 0 else mu + 1
