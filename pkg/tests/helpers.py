"""Shared test utilities: seeded random jet-polynomial generators."""

from fractions import Fraction
import itertools

from clawforge.expr import Expr, SymbolTable


def two_var_table():
    return SymbolTable(["t", "x"], ["u"])


def jet_pool(table, max_order):
    pool = [v.as_expr() for v in table.indep]
    for alpha in range(table.m):
        pool.append(table.jet_by_alpha(alpha).as_expr())
        for k in range(1, max_order + 1):
            for combo in itertools.combinations_with_replacement(table.indep, k):
                pool.append(table.jet_by_alpha(alpha, combo).as_expr())
    return pool


def random_poly_expr(rng, table, max_order=3, max_terms=4, max_factors=2):
    """Random polynomial jet expression: a short sum of small monomials
    with rational coefficients."""
    pool = jet_pool(table, max_order)
    out = Expr.const(0)
    for _ in range(rng.randint(1, max_terms)):
        term = Expr.const(Fraction(rng.randint(-4, 4), rng.randint(1, 3)))
        for _ in range(rng.randint(0, max_factors)):
            term = term * rng.choice(pool) ** rng.randint(1, 2)
        out = out + term
    return out
