"""Candidate PDE terms in the canonical form ``prefactor * g(x,t) * d_t^nu_t d_x^nu_x (u^p)``.

In this form integration by parts against a weight that vanishes on the
domain boundary is pure bookkeeping: every derivative moves onto ``g * w`` and
the prefactor picks up ``(-1)**(nu_x + nu_t)``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

__all__ = [
    "Power",
    "Sinusoid",
    "CoefficientBasis",
    "MonomialTerm",
    "WeakTerm",
    "canonical_weak_form",
    "default_ks_library",
    "expand_variable_coefficient",
    "parse_basis",
    "KS_TRUTH",
]


@dataclass(frozen=True)
class Power:
    """``(s - shift)**k`` for a non-negative integer ``k``."""

    k: int = 0
    shift: float = 0.0

    def derivative(self, order: int, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if order > self.k:
            return np.zeros_like(s)
        coef = math.perm(self.k, order)
        return coef * (s - self.shift) ** (self.k - order)

    def __str__(self):
        if self.k == 0:
            return "1"
        base = "{v}" if not self.shift else f"({{v}}-{self.shift:g})"
        return base if self.k == 1 else f"{base}^{self.k}"


@dataclass(frozen=True)
class Sinusoid:
    """``sin(wavenumber*s)`` or ``cos(wavenumber*s)``."""

    wavenumber: float
    kind: str = "sin"

    def __post_init__(self):
        if self.kind not in ("sin", "cos"):
            raise ValueError(f"kind must be 'sin' or 'cos', got {self.kind!r}")

    def derivative(self, order: int, s) -> np.ndarray:
        # d^n/ds^n sin(ks) = k^n sin(ks + n pi/2)
        s = np.asarray(s, dtype=float)
        phase = order * np.pi / 2 + (0.0 if self.kind == "sin" else np.pi / 2)
        return self.wavenumber**order * np.sin(self.wavenumber * s + phase)

    def __str__(self):
        return f"{self.kind}({self.wavenumber:.6g}{{v}})"


@dataclass(frozen=True)
class CoefficientBasis:
    """Separable known coefficient ``g(x, t) = gx(x) * gt(t)``."""

    x_factor: Power | Sinusoid = Power(0)
    t_factor: Power | Sinusoid = Power(0)
    name: str | None = None

    def __call__(self, x, t):
        return np.multiply.outer(self.x_factor.derivative(0, x), self.t_factor.derivative(0, t))

    @property
    def is_constant(self) -> bool:
        return self.x_factor == Power(0) and self.t_factor == Power(0)

    def __str__(self):
        if self.name:
            return self.name
        parts = [str(self.x_factor).format(v="x"), str(self.t_factor).format(v="t")]
        parts = [p for p in parts if p != "1"]
        return "*".join(parts) if parts else "1"


_FACTOR_RE = re.compile(r"^(?P<kind>sin|cos)_(?P<axis>[xt]):(?P<k>[-+0-9.eE]+)$|^(?P<var>[xt])(\^(?P<pow>\d+))?$")


def parse_basis(spec: str) -> CoefficientBasis:
    """Parse a basis id such as ``"1"``, ``"x"``, ``"t^2"``, ``"sin_x:0.0625"`` or ``"x*cos_t:0.5"``."""
    x_factor, t_factor = Power(0), Power(0)
    spec = spec.strip()
    if spec in ("", "1"):
        return CoefficientBasis()
    for token in spec.split("*"):
        mt = _FACTOR_RE.match(token.strip())
        if not mt:
            raise ValueError(f"cannot parse coefficient basis factor {token!r} in {spec!r}")
        if mt.group("kind"):
            factor = Sinusoid(float(mt.group("k")), mt.group("kind"))
            axis = mt.group("axis")
        else:
            factor = Power(int(mt.group("pow") or 1))
            axis = mt.group("var")
        if axis == "x":
            if x_factor != Power(0):
                raise ValueError(f"basis {spec!r} has more than one x factor")
            x_factor = factor
        else:
            if t_factor != Power(0):
                raise ValueError(f"basis {spec!r} has more than one t factor")
            t_factor = factor
    return CoefficientBasis(x_factor, t_factor, name=spec)


def _derivative_label(p: int, nu_x: int, nu_t: int) -> str:
    if p == 0:
        return "1"
    base = "u" if p == 1 else f"u^{p}"
    subs = "t" * nu_t + "x" * nu_x
    if not subs:
        return base
    return f"{base}_{subs}" if p == 1 else f"({base})_{subs}"


@dataclass(frozen=True)
class MonomialTerm:
    """``prefactor * g(x,t) * d_t^nu_t d_x^nu_x (u**power_p)``."""

    prefactor: Fraction | float = 1
    power_p: int = 1
    nu_x: int = 0
    nu_t: int = 0
    coeff_basis: CoefficientBasis | None = None
    label: str | None = None

    def __post_init__(self):
        for name in ("power_p", "nu_x", "nu_t"):
            v = getattr(self, name)
            if int(v) != v or v < 0:
                raise ValueError(f"{name} must be a non-negative integer, got {v}")
        if self.power_p == 0 and (self.nu_x or self.nu_t):
            raise ValueError("the constant term (p=0) cannot carry derivatives")
        if self.label is None:
            label = _derivative_label(self.power_p, self.nu_x, self.nu_t)
            if self.prefactor != 1:
                label = f"{self.prefactor}*{label}"
            if self.coeff_basis is not None and not self.coeff_basis.is_constant:
                label = f"{self.coeff_basis}*{label}"
            object.__setattr__(self, "label", label)

    def __str__(self):
        return self.label


@dataclass(frozen=True)
class WeakTerm:
    """Integrand ``prefactor * u**power_p * d_x^nu_x d_t^nu_t (g * w)``."""

    prefactor: float
    power_p: int
    nu_x: int
    nu_t: int
    coeff_basis: CoefficientBasis | None = None
    label: str = ""


def canonical_weak_form(term: MonomialTerm) -> WeakTerm:
    """Move every derivative off ``u`` and onto the weight."""
    sign = -1 if (term.nu_x + term.nu_t) % 2 else 1
    return WeakTerm(
        prefactor=float(sign * term.prefactor),
        power_p=term.power_p,
        nu_x=term.nu_x,
        nu_t=term.nu_t,
        coeff_basis=term.coeff_basis,
        label=term.label,
    )


def default_ks_library() -> list[MonomialTerm]:
    """The four KS terms followed by six candidate spurious terms.

    ``u u_x`` is stored in flux form ``(1/2) (u^2)_x``.
    """
    return [
        MonomialTerm(1, 1, 0, 1, label="u_t"),
        MonomialTerm(Fraction(1, 2), 2, 1, 0, label="u u_x"),
        MonomialTerm(1, 1, 2, 0, label="u_xx"),
        MonomialTerm(1, 1, 4, 0, label="u_xxxx"),
        MonomialTerm(1, 1, 1, 0, label="u_x"),
        MonomialTerm(1, 1, 3, 0, label="u_xxx"),
        MonomialTerm(1, 1, 0, 0, label="u"),
        MonomialTerm(1, 2, 0, 0, label="u^2"),
        MonomialTerm(1, 3, 0, 0, label="u^3"),
        MonomialTerm(1, 0, 0, 0, label="1"),
    ]


KS_TRUTH = {"u_t": 1.0, "u u_x": 1.0, "u_xx": 1.0, "u_xxxx": 1.0}


def expand_variable_coefficient(term: MonomialTerm, basis) -> list[MonomialTerm]:
    """One copy of ``term`` per basis function ``g_p``, each carrying ``g_p`` as its coefficient.

    Regressing on the expanded columns recovers the expansion coefficients of a
    space/time-dependent coefficient of ``term``.
    """
    basis = list(basis)
    if not basis:
        raise ValueError("variable-coefficient basis must not be empty")
    out = []
    for g in basis:
        if isinstance(g, str):
            g = parse_basis(g)
        if g.is_constant:
            out.append(replace(term, coeff_basis=None, label=term.label))
        else:
            out.append(replace(term, coeff_basis=g, label=f"{g}*{term.label}"))
    return out
