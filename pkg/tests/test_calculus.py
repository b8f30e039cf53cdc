import random

import pytest

from clawforge.calculus import (Equation, Generator, PdeSystem,
                                SolvedFormError, divergence, euler, prolong,
                                symmetry_residual, total_derivative)
from clawforge.expr import SymbolTable
from clawforge.parse import parse

from helpers import random_poly_expr, two_var_table


@pytest.fixture()
def tab():
    return SymbolTable(["t", "x"], ["u"])


def P(tab, s):
    return parse(s, tab)


def kdv_system(tab):
    return PdeSystem("kdv", tab,
                     [Equation(tab.jet("u", ["t"]), P(tab, "u[x,x,x]+u*u[x]"))])


# -- total derivatives ---------------------------------------------------------

def test_total_derivative_basics(tab):
    t, x = tab.indep
    assert total_derivative(P(tab, "u"), x) == P(tab, "u[x]")
    assert total_derivative(P(tab, "u[x,x] + u^2/2"), x) == \
        P(tab, "u[x,x,x] + u*u[x]")
    assert total_derivative(P(tab, "(1+u[x]^2)^(1/2)"), t) == \
        P(tab, "u[x]*u[t,x]*(1+u[x]^2)^(-1/2)")


def test_total_derivative_explicit_dependence(tab):
    t, x = tab.indep
    assert total_derivative(P(tab, "t*x"), x) == P(tab, "t")


def test_total_derivatives_commute_random():
    tab = two_var_table()
    t, x = tab.indep
    rng = random.Random(21)
    for _ in range(40):
        e = random_poly_expr(rng, tab)
        assert total_derivative(total_derivative(e, t), x) == \
            total_derivative(total_derivative(e, x), t)


def test_total_derivative_leibniz_random():
    tab = two_var_table()
    x = tab.indep[1]
    rng = random.Random(22)
    for _ in range(40):
        e = random_poly_expr(rng, tab, max_terms=3)
        f = random_poly_expr(rng, tab, max_terms=3)
        assert total_derivative(e * f, x) == \
            total_derivative(e, x) * f + e * total_derivative(f, x)


# -- euler operator --------------------------------------------------------------

def test_euler_basics(tab):
    assert euler(P(tab, "u[x]^2/2"), 0, tab) == P(tab, "-u[x,x]")
    assert euler(P(tab, "u*(u[t]-u[x,x,x]-u*u[x])"), 0, tab).is_zero


def test_euler_annihilates_divergences_random():
    tab = two_var_table()
    rng = random.Random(23)
    for _ in range(30):
        T = [random_poly_expr(rng, tab, max_terms=3),
             random_poly_expr(rng, tab, max_terms=3)]
        assert euler(divergence(T, tab), 0, tab).is_zero


# -- divergence ------------------------------------------------------------------

def test_divergence_examples(tab):
    assert divergence([P(tab, "u"), P(tab, "-u")], tab) == \
        P(tab, "u[t] - u[x]")
    assert divergence([P(tab, "u^2"), P(tab, "0")], tab) == \
        P(tab, "2*u*u[t]")


def test_divergence_length_mismatch(tab):
    with pytest.raises(ValueError):
        divergence([P(tab, "u")], tab)


def test_divergence_radical_law_reduces_to_zero():
    tab = two_var_table()
    sp = PdeSystem("sp", tab,
                   [Equation(tab.jet("u", ["t", "x"]),
                             parse("u + u^2*u[x,x]/2 + u*u[x]^2", tab))])
    d = divergence([parse("(1+u[x]^2)^(1/2)", tab),
                    parse("-u^2/2*(1+u[x]^2)^(1/2)", tab)], tab)
    assert sp.reduce(d).is_zero


# -- reduction modulo the system --------------------------------------------------

def test_reduce_examples(tab):
    kdv = kdv_system(tab)
    assert kdv.reduce(P(tab, "u[t] - u[x,x,x] - u*u[x]")).is_zero
    assert kdv.reduce(P(tab, "u[t,x]")) == \
        P(tab, "u[x,x,x,x] + u[x]^2 + u*u[x,x]")
    assert kdv.reduce(P(tab, "u^2")) == P(tab, "u^2")


def test_reduce_idempotent_random(tab):
    kdv = kdv_system(tab)
    rng = random.Random(24)
    for _ in range(25):
        e = random_poly_expr(rng, tab)
        r = kdv.reduce(e)
        assert kdv.reduce(r) == r


def test_reduce_corpus_equations_vanish(models):
    for entry in models.values():
        for eq in entry.system.equations:
            assert entry.system.reduce(eq.expr).is_zero


def test_solved_form_validation(tab):
    with pytest.raises(SolvedFormError):
        PdeSystem("bad", tab, [
            Equation(tab.jet("u", ["t"]), P(tab, "u[x]")),
            Equation(tab.jet("u", ["t", "x"]), P(tab, "u")),
        ])
    with pytest.raises(SolvedFormError):
        PdeSystem("bad2", tab,
                  [Equation(tab.jet("u", ["t"]), P(tab, "u[t,x]"))])


# -- prolongation and symmetry checks ----------------------------------------------

def test_prolong_translation_is_zero(tab):
    g = Generator((P(tab, "1"), P(tab, "0")), (P(tab, "0"),), label="dt")
    assert prolong(g, tab, 0, [tab.indep[1]]).is_zero


def test_prolong_scaling(tab):
    g = Generator((P(tab, "3*t"), P(tab, "x")), (P(tab, "-2*u"),), label="X2")
    assert prolong(g, tab, 0, [tab.indep[1]]) == P(tab, "-3*u[x]")


def test_prolong_galilei(tab):
    g = Generator((P(tab, "0"), P(tab, "t")), (P(tab, "-1"),), label="X1")
    assert prolong(g, tab, 0, [tab.indep[1]]).is_zero
    assert prolong(g, tab, 0, [tab.indep[0]]) == P(tab, "-u[x]")


def test_prolong_rejects_generalized_generators(tab):
    g = Generator((P(tab, "0"), P(tab, "u[x]")), (P(tab, "0"),), label="gen")
    with pytest.raises(ValueError):
        prolong(g, tab, 0, [tab.indep[1]])


def test_symmetry_residuals_kdv(tab):
    kdv = kdv_system(tab)
    X2 = Generator((P(tab, "3*t"), P(tab, "x")), (P(tab, "-2*u"),), label="X2")
    X4 = Generator((P(tab, "0"), P(tab, "1")), (P(tab, "0"),), label="X4")
    assert all(r.is_zero for r in symmetry_residual(X2, kdv))
    assert all(r.is_zero for r in symmetry_residual(X4, kdv))
    not_sym = Generator((P(tab, "0"), P(tab, "0")), (P(tab, "u"),), label="u du")
    res = symmetry_residual(not_sym, kdv)
    assert res[0] == P(tab, "-u*u[x]")


def test_generator_validation_rejects_stray_parameters():
    tab = SymbolTable(["t", "x"], ["u"], params=["a1"])
    with pytest.raises(ValueError):
        Generator((parse("a1", tab), parse("0", tab)), (parse("0", tab),))
    g = Generator((parse("a1", tab), parse("0", tab)), (parse("0", tab),),
                  parametrized=True)
    assert g.parametrized
