"""Homogeneous least squares via the SVD and greedy term elimination."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "EliminationStep",
    "SparseModel",
    "min_singular_vector",
    "iterative_elimination",
    "normalize_to_term",
]

DEGENERACY_GAP = 1e-12


def _as_matrix(Q) -> np.ndarray:
    Q = getattr(Q, "entries", Q)
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2:
        raise ValueError(f"library must be a 2D matrix, got shape {Q.shape}")
    return Q


def _min_svd(Q: np.ndarray):
    _, s, vt = np.linalg.svd(Q, full_matrices=False)
    c = vt[-1].copy()
    if c[np.argmax(np.abs(c))] < 0:
        c = -c
    degenerate = s.size > 1 and (s[-2] - s[-1]) <= DEGENERACY_GAP * max(s[0], np.finfo(float).tiny)
    return c, float(np.linalg.norm(Q @ c)), bool(degenerate)


def min_singular_vector(Q):
    """Unit right singular vector for the smallest singular value of ``Q``.

    Returns ``(c, eta)`` with ``eta = ||Q c||``. The sign is fixed so the entry
    of largest magnitude is positive.
    """
    Q = _as_matrix(Q)
    if Q.shape[1] == 0:
        raise ValueError("library has no columns")
    if Q.shape[0] < Q.shape[1]:
        raise ValueError(f"need at least as many rows as columns, got {Q.shape}")
    if not np.all(np.isfinite(Q)):
        raise ValueError("library contains non-finite entries")
    c, eta, _ = _min_svd(Q)
    return c, eta


@dataclass(frozen=True)
class EliminationStep:
    removed: int
    eta_before: float
    eta_after: float
    committed: bool


@dataclass
class SparseModel:
    """Result of :func:`iterative_elimination`.

    ``coefficients`` are in the units of the original library columns and have
    unit Euclidean norm; ``scaled_coefficients`` are the same solution on the
    unit-norm columns actually regressed.
    """

    active_terms: list[int]
    coefficients: np.ndarray
    residual: float
    elimination_trace: list[EliminationStep] = field(default_factory=list)
    scaled_coefficients: np.ndarray | None = None
    n_terms: int | None = None
    warnings: list[str] = field(default_factory=list)

    def coefficient_of(self, term: int) -> float:
        try:
            return float(self.coefficients[self.active_terms.index(term)])
        except ValueError:
            return 0.0

    def full_coefficients(self) -> np.ndarray:
        """Coefficients scattered into a vector over the whole library (zeros for eliminated terms)."""
        n = self.n_terms if self.n_terms is not None else max(self.active_terms) + 1
        out = np.zeros(n)
        out[self.active_terms] = self.coefficients
        return out


def iterative_elimination(Q, gamma: float = 1.4, normalize_columns: bool = False) -> SparseModel:
    """Greedily drop the least important term while the residual grows by less than ``gamma``.

    Each pass solves the homogeneous problem on the active columns, takes the
    term with the smallest ``|c_n|`` (ties go to the lowest index), and
    removes it if the new residual satisfies ``eta_new < gamma * eta``. Otherwise the current model is returned.

    Parameters
    ----------
    Q : array_like or LibraryMatrix
        K x N library with ``K >= N``.
    gamma : float
        Sparsification threshold, must exceed 1.
    normalize_columns : bool
        Regress on unit-norm columns and map coefficients back afterwards.
        Off by default: importance is then ``|c_n|`` on the raw columns.
    """
    if not gamma > 1:
        raise ValueError(f"gamma must be greater than 1, got {gamma}")
    Q = _as_matrix(Q)
    K, N = Q.shape
    if N == 0:
        raise ValueError("library has no columns")
    if K < N:
        raise ValueError(f"need at least as many library rows as terms, got K={K}, N={N}")
    if not np.all(np.isfinite(Q)):
        raise ValueError("library contains non-finite entries")

    norms = np.linalg.norm(Q, axis=0)
    if normalize_columns:
        scale = np.where(norms > 0, norms, 1.0)
    else:
        scale = np.ones(N)
    Qn = Q / scale

    active = list(range(N))
    trace: list[EliminationStep] = []
    notes: list[str] = []
    c, eta, degenerate = _min_svd(Qn)
    if degenerate:
        notes.append(f"degenerate smallest singular value with {N} terms")
    while len(active) > 1:
        drop = int(np.argmin(np.abs(c)))
        trial = active[:drop] + active[drop + 1:]
        c_new, eta_new, deg_new = _min_svd(Qn[:, trial])
        ok = eta_new < gamma * eta
        trace.append(EliminationStep(active[drop], eta, eta_new, ok))
        if not ok:
            break
        active, c, eta = trial, c_new, eta_new
        if deg_new:
            notes.append(f"degenerate smallest singular value with {len(active)} terms")

    coef = c / scale[active]
    coef = coef / np.linalg.norm(coef)
    if coef[np.argmax(np.abs(coef))] < 0:
        coef = -coef
    return SparseModel(
        active_terms=active,
        coefficients=coef,
        residual=eta,
        elimination_trace=trace,
        scaled_coefficients=c,
        n_terms=N,
        warnings=notes,
    )


def normalize_to_term(model: SparseModel, reference: int, tol: float = 1e-12) -> np.ndarray:
    """Coefficients of ``model`` divided by that of ``reference``, aligned with ``active_terms``."""
    if reference not in model.active_terms:
        raise ValueError(
            f"reference term {reference} was eliminated; the model cannot be "
            "written as an evolution equation in that term"
        )
    ref = model.coefficients[model.active_terms.index(reference)]
    if abs(ref) <= tol:
        raise ValueError(f"reference term {reference} has a vanishing coefficient ({ref:.3g})")
    return np.asarray(model.coefficients) / ref
