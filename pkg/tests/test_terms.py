from fractions import Fraction

import numpy as np
import pytest

from weakpde.terms import (
    CoefficientBasis,
    MonomialTerm,
    Power,
    Sinusoid,
    canonical_weak_form,
    default_ks_library,
    expand_variable_coefficient,
    parse_basis,
)


class TestCanonicalWeakForm:
    def test_time_derivative(self):
        wt = canonical_weak_form(MonomialTerm(1, 1, 0, 1))
        assert (wt.prefactor, wt.power_p, wt.nu_x, wt.nu_t) == (-1, 1, 0, 1)

    def test_flux_form_advection(self):
        wt = canonical_weak_form(MonomialTerm(Fraction(1, 2), 2, 1, 0))
        assert (wt.prefactor, wt.power_p, wt.nu_x) == (-0.5, 2, 1)

    def test_fourth_derivative(self):
        wt = canonical_weak_form(MonomialTerm(1, 1, 4, 0))
        assert (wt.prefactor, wt.nu_x) == (1, 4)

    @pytest.mark.parametrize("a", [0.5, -3.0, 7.25])
    def test_linear_in_prefactor(self, a):
        for t in default_ks_library():
            base = canonical_weak_form(t).prefactor
            scaled = canonical_weak_form(MonomialTerm(a * t.prefactor, t.power_p, t.nu_x, t.nu_t)).prefactor
            assert scaled == pytest.approx(a * base)


class TestDefaultLibrary:
    def test_shape(self):
        lib = default_ks_library()
        assert len(lib) == 10
        t0, t9 = lib[0], lib[9]
        assert (t0.prefactor, t0.power_p, t0.nu_x, t0.nu_t) == (1, 1, 0, 1)
        assert (t9.prefactor, t9.power_p, t9.nu_x, t9.nu_t) == (1, 0, 0, 0)
        assert [t.label for t in lib[:4]] == ["u_t", "u u_x", "u_xx", "u_xxxx"]
        assert len({t.label for t in lib}) == 10

    def test_constant_cannot_carry_derivatives(self):
        with pytest.raises(ValueError):
            MonomialTerm(1, 0, 1, 0)

    def test_auto_labels(self):
        assert MonomialTerm(1, 3, 0, 0).label == "u^3"
        assert MonomialTerm(1, 2, 2, 0).label == "(u^2)_xx"
        assert MonomialTerm(2, 1, 1, 1).label == "2*u_tx"


class TestBasis:
    @pytest.mark.parametrize("spec,gx,gt", [
        ("1", Power(0), Power(0)),
        ("x", Power(1), Power(0)),
        ("t^2", Power(0), Power(2)),
        ("sin_x:0.0625", Sinusoid(0.0625, "sin"), Power(0)),
        ("x*cos_t:0.5", Power(1), Sinusoid(0.5, "cos")),
    ])
    def test_parse(self, spec, gx, gt):
        b = parse_basis(spec)
        assert (b.x_factor, b.t_factor) == (gx, gt)

    @pytest.mark.parametrize("spec", ["y", "x*x", "sin_x", "exp_x:1"])
    def test_parse_errors(self, spec):
        with pytest.raises(ValueError):
            parse_basis(spec)

    @pytest.mark.parametrize("factor", [Power(3), Power(2, 0.4), Sinusoid(1.3, "sin"), Sinusoid(0.7, "cos")])
    def test_closed_form_derivatives(self, factor):
        s = np.linspace(-1, 2, 7)
        h = 1e-4
        for order in range(1, 5):
            fd = (factor.derivative(order - 1, s + h) - factor.derivative(order - 1, s - h)) / (2 * h)
            np.testing.assert_allclose(factor.derivative(order, s), fd, rtol=1e-6, atol=1e-6)

    def test_evaluation(self):
        g = CoefficientBasis(Power(1), Sinusoid(2.0, "cos"))
        x, t = np.array([1.0, 2.0]), np.array([0.0, 0.5])
        np.testing.assert_allclose(g(x, t), np.outer(x, np.cos(2 * t)))


class TestExpansion:
    def test_constant_basis_identity(self):
        term = default_ks_library()[3]
        (out,) = expand_variable_coefficient(term, ["1"])
        assert out == term

    def test_two_functions(self):
        term = default_ks_library()[3]
        out = expand_variable_coefficient(term, ["1", "x"])
        assert [t.label for t in out] == ["u_xxxx", "x*u_xxxx"]
        assert out[1].coeff_basis.x_factor == Power(1)

    def test_empty(self):
        with pytest.raises(ValueError):
            expand_variable_coefficient(default_ks_library()[0], [])
