import random
from fractions import Fraction as F

import pytest

from strataflow.exactalg import (
    EmptyWindowError,
    LaurentSeries,
    MultiPoly,
    RelationSet,
    UnknownVariableError,
    hvar,
    poly_arith,
)

x = MultiPoly.var("x")
y = MultiPoly.var("y")
z = MultiPoly.var("z")


def test_difference_of_squares():
    assert poly_arith(x + y, x - y, "mul") == x * x - y * y


def test_substituted_relation_cancels():
    # H[3][1] := -3/2 H[1][1]^2 makes H[3][1] + 3/2 H[1][1]^2 vanish
    expr = hvar(3, 1) + F(3, 2) * hvar(1, 1) ** 2
    reduced = expr.subs({"H[3][1]": F(-3, 2) * hvar(1, 1) ** 2})
    assert reduced.is_zero


def _random_poly(rng, nvars=3, max_deg=4, terms=5):
    names = ["x", "y", "z"][:nvars]
    poly = MultiPoly.zero()
    for _ in range(terms):
        mono = [(n, rng.randint(0, max_deg)) for n in names]
        coeff = F(rng.randint(-9, 9), rng.randint(1, 7))
        poly = poly + MultiPoly.monomial(coeff, mono)
    return poly


def _dense(poly, max_deg):
    """Dense exponent-box image of a 3-variable polynomial."""
    box = {}
    for mono, c in poly.terms.items():
        d = dict(mono)
        key = (d.get("x", 0), d.get("y", 0), d.get("z", 0))
        box[key] = box.get(key, F(0)) + c
    return {k: v for k, v in box.items() if v != 0}


def _convolve(a, b):
    out = {}
    for ka, ca in a.items():
        for kb, cb in b.items():
            key = tuple(i + j for i, j in zip(ka, kb))
            out[key] = out.get(key, F(0)) + ca * cb
    return {k: v for k, v in out.items() if v != 0}


def test_product_matches_convolution_oracle():
    rng = random.Random(7)
    for _ in range(25):
        a = _random_poly(rng)
        b = _random_poly(rng)
        assert _dense(a * b, 99) == _convolve(_dense(a, 99), _dense(b, 99))


def test_ring_axioms_random_triples():
    rng = random.Random(11)
    for _ in range(20):
        a, b, c = (_random_poly(rng, terms=4) for _ in range(3))
        assert (a * b) * c == a * (b * c)
        assert a * (b + c) == a * b + a * c
        assert a + b == b + a
        assert a * b == b * a


def test_power_and_scalars():
    assert (x + 1) ** 3 == x ** 3 + 3 * x ** 2 + 3 * x + 1
    assert (x - x).is_zero
    assert MultiPoly.const(0).is_zero
    with pytest.raises(ValueError):
        x ** -1


def test_canonical_serialization_roundtrip():
    rng = random.Random(3)
    for _ in range(10):
        p = _random_poly(rng)
        assert MultiPoly.from_string(p.canonical_str()) == p
    assert MultiPoly.zero().canonical_str() == "0"
    assert MultiPoly.from_string("0").is_zero


def test_diff_and_eval():
    p = x ** 2 * y + 3 * y
    assert p.diff("x") == 2 * x * y
    assert p.diff("y") == x ** 2 + 3
    assert p.eval_exact({"x": F(2), "y": F(1, 3)}) == F(4, 3) + 1
    with pytest.raises(UnknownVariableError):
        p.eval_exact({"x": F(1)})


# -- Laurent series ----------------------------------------------------------


def test_binomial_square_exact_series():
    h = hvar(1, 1)
    s = LaurentSeries({1: MultiPoly.const(1), -1: h}, -1, 1, tail_exact=True)
    sq = s * s
    assert sq.coefficient(2) == MultiPoly.const(1)
    assert sq.coefficient(0) == 2 * h
    assert sq.coefficient(-2) == h * h
    assert sq.tail_exact and sq.min_exp == -2


def test_truncated_product_window_clips():
    # inexact tails: the reliable floor is the sum of one floor and the
    # other ceiling, so deep coefficients are dropped rather than wrong
    a = LaurentSeries({1: MultiPoly.const(1), -1: hvar(1, 1)}, -5, 1)
    b = LaurentSeries({1: MultiPoly.const(1)}, -5, 1)
    prod = a * b
    assert prod.min_exp == -4 and prod.max_exp == 2
    assert not prod.tail_exact


def test_empty_window_error():
    a = LaurentSeries({0: MultiPoly.const(1)}, -1, 0)
    b = LaurentSeries({5: MultiPoly.const(1)}, -1, 5)
    with pytest.raises(EmptyWindowError):
        _ = a * b * b * b  # floors rise past the ceiling


def test_series_multiplication_agrees_with_evaluation():
    rng = random.Random(23)
    for _ in range(50):
        def rand_series():
            coeffs = {}
            for n in range(-3, 4):
                if rng.random() < 0.6:
                    coeffs[n] = MultiPoly.const(F(rng.randint(-5, 5), rng.randint(1, 4)))
            return LaurentSeries(coeffs, -3, 3, tail_exact=True)

        a, b = rand_series(), rand_series()
        z0 = F(rng.randint(1, 7), rng.randint(1, 5))
        lhs = (a * b).subs_z(z0, {})
        rhs = a.subs_z(z0, {}) * b.subs_z(z0, {})
        assert lhs == rhs


def test_g0_p1_squared_reduces_to_curve(rs13):
    from strataflow.strata import StratumSpec, basis_series

    spec = StratumSpec(0, window=13)
    series = basis_series(spec)
    rs = rs13[0]
    sq = rs.reduce_series(series[1] * series[1])
    assert sq.coefficient(2) == MultiPoly.const(1)
    assert sq.coefficient(0) == 2 * hvar(1, 1)
    for n in sq.exponents():
        if n < 0:
            assert sq.coefficient(n).is_zero


def test_g1_p3_p5_matches_expansion(rs13, spec13, table13):
    from strataflow.strata import basis_series, even_series

    spec, rs, table = spec13[1], rs13[1], table13[1]
    series = basis_series(spec)
    prod = rs.reduce_series(series[3] * series[5])
    recon = None
    for l, c in table.row(3, 5).items():
        base = series[l] if l % 2 else even_series(l // 2)
        term = base.scale(c)
        recon = term if recon is None else recon + term
    diff = rs.reduce_series(prod - recon)
    assert diff.is_zero


# -- reduction ---------------------------------------------------------------


def test_reduce_golden_and_fixed_point(rs13):
    rs = rs13[1]
    got = rs.reduce(hvar(5, -1))
    assert got == hvar(3, 1) - hvar(3, -1) ** 2
    for gen in rs.generators:
        assert rs.reduce(MultiPoly.var(gen)) == MultiPoly.var(gen)


def test_reduce_idempotent_and_homomorphism(rs13):
    rng = random.Random(5)
    for g in (0, 1, 2):
        rs = rs13[g]
        names = sorted(rs.solved)
        for _ in range(34):
            a = MultiPoly.var(names[rng.randrange(len(names))])
            b = MultiPoly.var(names[rng.randrange(len(names))])
            red = rs.reduce(a * b)
            assert rs.reduce(red) == red
            assert red == rs.reduce(rs.reduce(a) * rs.reduce(b))


def test_reduce_unknown_variable(rs13):
    with pytest.raises(UnknownVariableError):
        rs13[0].reduce(MultiPoly.var("mystery"))
    # but foreign symbols pass through when allowed
    out = rs13[0].reduce(MultiPoly.var("mystery"), allow=lambda v: v == "mystery")
    assert out == MultiPoly.var("mystery")


def test_relation_set_json_roundtrip(rs13):
    rs = rs13[1]
    back = RelationSet.from_json(rs.to_json())
    assert back.generators == rs.generators
    assert set(back.solved) == set(rs.solved)
    assert all((back.solved[k] - rs.solved[k]).is_zero for k in rs.solved)
