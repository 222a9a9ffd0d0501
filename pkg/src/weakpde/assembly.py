"""Composite trapezoidal quadrature and assembly of the weak-form library matrix."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .domains import IntegrationDomain, sample_domains
from .field import Field2D
from .terms import MonomialTerm, WeakTerm, canonical_weak_form
from .weights import WeightSpec, factor_values

__all__ = [
    "LibraryMatrix",
    "trapezoid_weights",
    "trapezoid_2d",
    "assemble_library",
    "sample_domains",
]


def trapezoid_weights(n: int) -> np.ndarray:
    """Composite trapezoid weights for ``n`` equally spaced nodes and unit spacing."""
    if n < 2:
        raise ValueError("trapezoid rule needs at least 2 nodes")
    w = np.ones(n)
    w[0] = w[-1] = 0.5
    return w


def trapezoid_2d(values, delta_x: float, delta_t: float) -> float:
    """Tensor-product composite trapezoid rule over the full array."""
    values = np.asarray(values, dtype=float)
    if values.ndim != 2 or min(values.shape) < 2:
        raise ValueError(f"trapezoid_2d needs a matrix of at least 2x2, got shape {values.shape}")
    wx = trapezoid_weights(values.shape[0])
    wt = trapezoid_weights(values.shape[1])
    return float(wx @ values @ wt) * delta_x * delta_t


@dataclass(frozen=True)
class LibraryMatrix:
    """K x N library ``Q`` with the (domain, weight) behind each row and the term behind each column."""

    entries: np.ndarray
    row_meta: tuple[tuple[int, int], ...]
    col_meta: tuple

    @property
    def labels(self) -> list[str]:
        return [t.label for t in self.col_meta]

    def columns(self, idx) -> "LibraryMatrix":
        idx = list(idx)
        return LibraryMatrix(self.entries[:, idx], self.row_meta, tuple(self.col_meta[i] for i in idx))

    def to_csv(self, path) -> None:
        """Debug dump: one row per library row, preceded by domain and weight ids."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["domain", "weight", *self.labels])
            for (k, j), row in zip(self.row_meta, self.entries):
                writer.writerow([k, j, *(f"{v:.17e}" for v in row)])


def _axis_vectors(order, power, freq, parity, n, half_width, basis_factor, coords):
    """Trapezoid-weighted values of ``d^order (g * w_axis)`` along one axis.

    Returns shape ``(n,)`` when ``g`` is constant along the axis, else
    ``(n_domains, n)`` with ``coords`` the absolute coordinates per domain.
    """
    trap = trapezoid_weights(n)
    if basis_factor is None or getattr(basis_factor, "k", None) == 0:
        return trap * factor_values(power, freq, parity, order, n) / half_width**order
    total = 0.0
    for a in range(order + 1):
        w_part = factor_values(power, freq, parity, order - a, n) / half_width ** (order - a)
        total = total + math.comb(order, a) * basis_factor.derivative(a, coords) * w_part
    return trap * total


def _windows(values, domains, power):
    h_x, h_t = domains[0].half_cells_x, domains[0].half_cells_t
    cx = np.array([d.center_ix for d in domains])
    ct = np.array([d.center_it for d in domains])
    ix = cx[:, None] + np.arange(-h_x, h_x + 1)
    it = ct[:, None] + np.arange(-h_t, h_t + 1)
    win = values[ix[:, :, None], it[:, None, :]]
    if power == 0:
        return np.ones_like(win)
    return win**power


def assemble_library(field: Field2D, terms, weights, domains, chunk_size: int = 256) -> LibraryMatrix:
    """Weak-form library matrix.

    Entry ``(k*J + j, n)`` is ``prefactor_n`` times the trapezoid-rule integral
    over domain ``k`` of ``u**p_n * d^nu (g_n * w_j)``. Derivatives of ``u`` are
    never evaluated.

    Parameters
    ----------
    field : Field2D
    terms : sequence of MonomialTerm or WeakTerm
        Monomial terms are converted with :func:`canonical_weak_form`.
    weights : sequence of WeightSpec
    domains : sequence of IntegrationDomain
        All domains must share the same half-widths.
    chunk_size : int
        Domains processed per vectorized batch.
    """
    terms = list(terms)
    weights = list(weights)
    domains = list(domains)
    if not terms:
        raise ValueError("library has no terms")
    if not weights:
        raise ValueError("no weight functions given")
    if not domains:
        raise ValueError("no integration domains given")
    weak = [canonical_weak_form(t) if isinstance(t, MonomialTerm) else t for t in terms]
    for t in weak:
        if not isinstance(t, WeakTerm):
            raise TypeError(f"expected MonomialTerm or WeakTerm, got {type(t).__name__}")
        for w in weights:
            w.check_orders(t.nu_x, t.nu_t)
    if not np.all(np.isfinite(field.values)):
        raise ValueError("field contains non-finite values")
    sizes = {(d.half_cells_x, d.half_cells_t) for d in domains}
    if len(sizes) != 1:
        raise ValueError("all integration domains must have the same size")
    for d in domains:
        d.check_fits(*field.shape)

    dom0 = domains[0]
    nx, nt = dom0.shape
    H_x, H_t = dom0.half_widths(field.delta_x, field.delta_t)
    cell = field.delta_x * field.delta_t
    J = len(weights)
    Q = np.empty((len(domains) * J, len(weak)))
    offsets_x = np.arange(-dom0.half_cells_x, dom0.half_cells_x + 1) * field.delta_x
    offsets_t = np.arange(-dom0.half_cells_t, dom0.half_cells_t + 1) * field.delta_t

    for start in range(0, len(domains), chunk_size):
        batch = domains[start:start + chunk_size]
        xc = field.origin_x + field.delta_x * np.array([d.center_ix for d in batch])
        tc = field.origin_t + field.delta_t * np.array([d.center_it for d in batch])
        x_abs = xc[:, None] + offsets_x
        t_abs = tc[:, None] + offsets_t
        win_cache = {}
        half_cache = {}
        for n, t in enumerate(weak):
            if t.power_p not in win_cache:
                win_cache[t.power_p] = _windows(field.values, batch, t.power_p)
            U = win_cache[t.power_p]
            bx = t.coeff_basis.x_factor if t.coeff_basis is not None else None
            bt = t.coeff_basis.t_factor if t.coeff_basis is not None else None
            for j, w in enumerate(weights):
                key = (t.power_p, j, t.nu_t, bt)
                if key not in half_cache:
                    vt = _axis_vectors(t.nu_t, w.beta, w.m, w.parity_t, nt, H_t, bt, t_abs)
                    half_cache[key] = U @ vt if vt.ndim == 1 else np.einsum("dxt,dt->dx", U, vt)
                vx = _axis_vectors(t.nu_x, w.alpha, w.l, w.parity_x, nx, H_x, bx, x_abs)
                vals = (half_cache[key] * vx).sum(axis=-1)
                rows = (start + np.arange(len(batch))) * J + j
                Q[rows, n] = t.prefactor * cell * vals

    row_meta = tuple((k, j) for k in range(len(domains)) for j in range(J))
    return LibraryMatrix(Q, row_meta, tuple(terms))
