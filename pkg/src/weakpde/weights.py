"""Windowed trigonometric weight functions and their exact derivatives.

A weight is the separable product ``X(xbar) * T(tbar)`` with

    X(s) = (s**2 - 1)**alpha * trig(l*pi*s),    trig in {cos, sin}

on the nondimensional interval ``s in [-1, 1]``. Derivatives are carried in
closed form as ``(s**2 - 1)**r * (Pc(s) cos(w s) + Ps(s) sin(w s))``. Keeping the
envelope power ``r`` factored out means values near ``s = +-1`` never suffer
cancellation, and the boundary zeros are exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import Polynomial

__all__ = [
    "EnvelopeTrigFactor",
    "WeightSpec",
    "enumerate_weight_set",
    "eval_weight_derivative",
    "factor_values",
]

_ONE = Polynomial([1.0])
_ZERO = Polynomial([0.0])
_S = Polynomial([0.0, 1.0])
_S2M1 = Polynomial([-1.0, 0.0, 1.0])


def _trim(p: Polynomial) -> Polynomial:
    return p.trim() if p.coef.size > 1 else p


@dataclass(frozen=True)
class EnvelopeTrigFactor:
    """``(s**2-1)**r * (cos_poly(s) cos(omega s) + sin_poly(s) sin(omega s))``."""

    r: int
    cos_poly: Polynomial
    sin_poly: Polynomial
    omega: float

    @classmethod
    def create(cls, alpha: int, freq_index: int, parity: str) -> "EnvelopeTrigFactor":
        if parity not in ("cos", "sin"):
            raise ValueError(f"parity must be 'cos' or 'sin', got {parity!r}")
        cos_poly, sin_poly = (_ONE, _ZERO) if parity == "cos" else (_ZERO, _ONE)
        return cls(alpha, cos_poly, sin_poly, np.pi * freq_index)

    def derivative(self) -> "EnvelopeTrigFactor":
        r, pc, ps, w = self.r, self.cos_poly, self.sin_poly, self.omega
        dc = pc.deriv() + w * ps
        ds = ps.deriv() - w * pc
        if r == 0:
            return EnvelopeTrigFactor(0, _trim(dc), _trim(ds), w)
        # d/ds[(s^2-1)^r P] = (s^2-1)^(r-1) [2 r s P + (s^2-1) P']
        new_c = 2 * r * _S * pc + _S2M1 * dc
        new_s = 2 * r * _S * ps + _S2M1 * ds
        return EnvelopeTrigFactor(r - 1, _trim(new_c), _trim(new_s), w)

    def nth_derivative(self, order: int) -> "EnvelopeTrigFactor":
        out = self
        for _ in range(order):
            out = out.derivative()
        return out

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        val = self.cos_poly(s) * np.cos(self.omega * s) + self.sin_poly(s) * np.sin(self.omega * s)
        if self.r:
            val = val * (s * s - 1.0) ** self.r
        return val


@dataclass(frozen=True)
class WeightSpec:
    """One real weight function: envelope powers, frequency indices and parities."""

    alpha: int
    beta: int
    l: int = 0
    m: int = 0
    parity_x: str = "cos"
    parity_t: str = "cos"

    def __post_init__(self):
        for name in ("alpha", "beta", "l", "m"):
            if int(getattr(self, name)) != getattr(self, name) or getattr(self, name) < 0:
                raise ValueError(f"{name} must be a non-negative integer, got {getattr(self, name)}")
        for name in ("parity_x", "parity_t"):
            if getattr(self, name) not in ("cos", "sin"):
                raise ValueError(f"{name} must be 'cos' or 'sin', got {getattr(self, name)!r}")
        if self.parity_x == "sin" and self.l == 0:
            raise ValueError("a sin factor with l=0 vanishes identically")
        if self.parity_t == "sin" and self.m == 0:
            raise ValueError("a sin factor with m=0 vanishes identically")

    @property
    def label(self) -> str:
        return f"{self.parity_x}{self.l}.{self.parity_t}{self.m}"

    def factor_x(self) -> EnvelopeTrigFactor:
        return EnvelopeTrigFactor.create(self.alpha, self.l, self.parity_x)

    def factor_t(self) -> EnvelopeTrigFactor:
        return EnvelopeTrigFactor.create(self.beta, self.m, self.parity_t)

    def check_orders(self, nu_x: int, nu_t: int) -> None:
        if nu_x > self.alpha or nu_t > self.beta:
            raise ValueError(
                f"derivative orders (nu_x={nu_x}, nu_t={nu_t}) exceed the envelope "
                f"powers (alpha={self.alpha}, beta={self.beta}); boundary terms "
                "would not vanish under integration by parts"
            )


def enumerate_weight_set(alpha: int, beta: int, l: int, m: int, parities=None) -> list[WeightSpec]:
    """Real weights spanning the four sign choices of ``exp(+-i l pi x) exp(+-i m pi t)``.

    Gives 4 weights when ``l, m > 0``, 2 when exactly one is zero and 1 when
    both are. ``parities`` optionally restricts the set to the listed
    ``(parity_x, parity_t)`` pairs.
    """
    px = ("cos", "sin") if l > 0 else ("cos",)
    pt = ("cos", "sin") if m > 0 else ("cos",)
    combos = [(a, b) for a in px for b in pt]
    if parities is not None:
        wanted = {tuple(p) for p in parities}
        unknown = wanted - set(combos)
        if unknown:
            raise ValueError(f"parities {sorted(unknown)} are not valid for l={l}, m={m}")
        combos = [c for c in combos if c in wanted]
    return [WeightSpec(alpha, beta, l, m, a, b) for a, b in combos]


@lru_cache(maxsize=512)
def _factor_values_cached(power: int, freq: int, parity: str, order: int, n_points: int) -> np.ndarray:
    f = EnvelopeTrigFactor.create(power, freq, parity).nth_derivative(order)
    vals = f(np.linspace(-1.0, 1.0, n_points))
    vals.setflags(write=False)
    return vals


def factor_values(power: int, freq: int, parity: str, order: int, n_points: int) -> np.ndarray:
    """``d^order/ds^order`` of a 1D weight factor on ``n_points`` nodes spanning [-1, 1].

    Cached; the returned array is read-only.
    """
    return _factor_values_cached(int(power), int(freq), parity, int(order), int(n_points))


def eval_weight_derivative(w: WeightSpec, nu_x: int, nu_t: int, domain, grid) -> np.ndarray:
    """``d^nu_x/dx^nu_x d^nu_t/dt^nu_t w`` on the grid points of ``domain``.

    Parameters
    ----------
    w : WeightSpec
    nu_x, nu_t : int
        Derivative orders in physical coordinates.
    domain : IntegrationDomain
    grid : tuple of float
        ``(delta_x, delta_t)``.

    Returns
    -------
    ndarray of shape ``domain.shape``
    """
    w.check_orders(nu_x, nu_t)
    delta_x, delta_t = grid
    H_x, H_t = domain.half_widths(delta_x, delta_t)
    nx, nt = domain.shape
    fx = factor_values(w.alpha, w.l, w.parity_x, nu_x, nx) / H_x**nu_x
    ft = factor_values(w.beta, w.m, w.parity_t, nu_t, nt) / H_t**nu_t
    return np.outer(fx, ft)
