"""scikit-learn style estimators wrapping library assembly and sparse regression."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .assembly import LibraryMatrix, assemble_library
from .domains import half_cells_for, sample_domains
from .field import Field2D
from .regression import iterative_elimination, normalize_to_term
from .terms import default_ks_library
from .weights import enumerate_weight_set

__all__ = ["WeakLibrary", "SparseWeakRegression", "WeakPDEIdentifier", "check_field"]


def check_field(X) -> Field2D:
    if not isinstance(X, Field2D):
        raise TypeError(f"expected a Field2D, got {type(X).__name__}")
    if not np.all(np.isfinite(X.values)):
        raise ValueError("field contains non-finite values")
    return X


def _check_order(name, value, lower):
    if int(value) != value or value < lower:
        raise ValueError(f"{name} must be an integer >= {lower}, got {value!r}")


class WeakLibrary(TransformerMixin, BaseEstimator):
    """Weak-form library of candidate terms on randomly placed integration domains.

    ``fit`` samples the domains for a field's grid; ``transform`` integrates
    every term against every (domain, weight) pair, returning the K x N
    matrix ``Q``.

    Parameters
    ----------
    library : list of MonomialTerm, optional
        Candidate terms. Defaults to :func:`default_ks_library`.
    alpha, beta : int
        Envelope powers in space and time.
    l, m : int
        Weight frequency indices in space and time.
    parities : list of (str, str), optional
        Restrict the weight set to these ``(parity_x, parity_t)`` pairs.
    width_x, width_t : float
        Target physical domain extents ``F_x = 2 H_x`` and ``F_t = 2 H_t``;
        rounded to whole grid cells, see ``widths_``.
    n_domains : int
        Number of integration domains.
    random_state : int, optional
        Seed for domain placement.
    """

    def __init__(self, library=None, alpha=8, beta=8, l=1, m=2, parities=None,
                 width_x=14.73, width_t=75.0, n_domains=50, random_state=None):
        self.library = library
        self.alpha = alpha
        self.beta = beta
        self.l = l
        self.m = m
        self.parities = parities
        self.width_x = width_x
        self.width_t = width_t
        self.n_domains = n_domains
        self.random_state = random_state

    def fit(self, X, y=None):
        field = check_field(X)
        _check_order("n_domains", self.n_domains, 1)
        self.terms_ = list(self.library) if self.library is not None else default_ks_library()
        self.weights_ = enumerate_weight_set(self.alpha, self.beta, self.l, self.m, self.parities)
        nu_x = max(t.nu_x for t in self.terms_)
        nu_t = max(t.nu_t for t in self.terms_)
        self.weights_[0].check_orders(nu_x, nu_t)
        hx = half_cells_for(self.width_x, field.delta_x)
        ht = half_cells_for(self.width_t, field.delta_t)
        self.half_cells_ = (hx, ht)
        self.widths_ = (2 * hx * field.delta_x, 2 * ht * field.delta_t)
        self.domains_ = sample_domains(self.n_domains, hx, ht, field.shape, self.random_state)
        self.grid_shape_ = field.shape
        self.n_features_out_ = len(self.terms_)
        return self

    def library_matrix(self, X) -> LibraryMatrix:
        check_is_fitted(self, "domains_")
        field = check_field(X)
        if field.shape != self.grid_shape_:
            raise ValueError(f"field shape {field.shape} differs from the fitted grid {self.grid_shape_}")
        return assemble_library(field, self.terms_, self.weights_, self.domains_)

    def transform(self, X):
        return self.library_matrix(X).entries

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "terms_")
        return np.asarray([t.label for t in self.terms_], dtype=object)


class SparseWeakRegression(BaseEstimator):
    """Homogeneous sparse regression ``Q c = 0`` by iterative term elimination.

    Parameters
    ----------
    gamma : float
        Largest accepted ratio of residuals before and after removing a term.
    normalize_columns : bool
        Regress on unit-norm columns. Off by default; see the README for why.
    """

    def __init__(self, gamma=1.4, normalize_columns=False):
        self.gamma = gamma
        self.normalize_columns = normalize_columns

    def fit(self, X, y=None):
        Q = check_array(getattr(X, "entries", X), ensure_min_samples=1)
        self.model_ = iterative_elimination(Q, self.gamma, self.normalize_columns)
        self.coef_ = self.model_.full_coefficients()
        self.support_ = np.zeros(Q.shape[1], dtype=bool)
        self.support_[self.model_.active_terms] = True
        self.residual_ = self.model_.residual
        self.n_features_in_ = Q.shape[1]
        return self

    def predict(self, X):
        """Weak residual of every library row under the fitted coefficients."""
        check_is_fitted(self, "coef_")
        Q = check_array(getattr(X, "entries", X))
        return Q @ self.coef_

    def score(self, X, y=None):
        return -float(np.linalg.norm(self.predict(X)))


class WeakPDEIdentifier(BaseEstimator):
    """Identify a parsimonious PDE from a gridded field.

    Chains :class:`WeakLibrary` and :class:`SparseWeakRegression`, then scales
    the coefficients so the ``reference`` term has coefficient 1.

    Attributes
    ----------
    coef_ : ndarray
        Coefficients over the whole library, zero for eliminated terms.
    support_ : ndarray of bool
    feature_names_ : list of str
    """

    def __init__(self, library=None, alpha=8, beta=8, l=1, m=2, parities=None,
                 width_x=14.73, width_t=75.0, n_domains=50, gamma=1.4,
                 normalize_columns=False, reference="u_t", random_state=None):
        self.library = library
        self.alpha = alpha
        self.beta = beta
        self.l = l
        self.m = m
        self.parities = parities
        self.width_x = width_x
        self.width_t = width_t
        self.n_domains = n_domains
        self.gamma = gamma
        self.normalize_columns = normalize_columns
        self.reference = reference
        self.random_state = random_state

    def _library_params(self):
        return {k: getattr(self, k) for k in (
            "library", "alpha", "beta", "l", "m", "parities",
            "width_x", "width_t", "n_domains", "random_state")}

    def fit(self, X, y=None):
        field = check_field(X)
        self.library_ = WeakLibrary(**self._library_params()).fit(field)
        Q = self.library_.library_matrix(field)
        self.regressor_ = SparseWeakRegression(self.gamma, self.normalize_columns).fit(Q.entries)
        self.feature_names_ = Q.labels
        self.model_ = self.regressor_.model_
        self.support_ = self.regressor_.support_
        ref = self._reference_index()
        if self.support_[ref]:
            scaled = normalize_to_term(self.model_, ref)
            self.coef_ = np.zeros(len(self.feature_names_))
            self.coef_[self.model_.active_terms] = scaled
        else:
            self.coef_ = self.regressor_.coef_.copy()
        self.reference_index_ = ref
        self.reference_active_ = bool(self.support_[ref])
        return self

    def _reference_index(self) -> int:
        if isinstance(self.reference, (int, np.integer)):
            return int(self.reference)
        try:
            return self.feature_names_.index(self.reference)
        except ValueError:
            raise ValueError(f"reference term {self.reference!r} is not in the library") from None

    def predict(self, X):
        """Weak residual ``Q c`` of a field on the fitted domains and weights."""
        check_is_fitted(self, "coef_")
        return self.library_.transform(check_field(X)) @ self.coef_

    @property
    def coefficients_(self) -> dict:
        check_is_fitted(self, "coef_")
        return {self.feature_names_[i]: float(self.coef_[i]) for i in np.flatnonzero(self.support_)}

    def equation(self, precision: int = 3) -> str:
        """Human-readable ``... = 0`` form of the identified model."""
        check_is_fitted(self, "coef_")
        active = list(np.flatnonzero(self.support_))
        ref = self.reference_index_
        parts = []
        if self.reference_active_:
            active.remove(ref)
            parts.append(self.feature_names_[ref])
        for i in active:
            c = self.coef_[i]
            sign = "-" if c < 0 else "+"
            body = f"{abs(c):.{precision}f} {self.feature_names_[i]}"
            parts.append(f"{sign} {body}" if parts else (f"-{body}" if c < 0 else body))
        return " ".join(parts) + " = 0"
