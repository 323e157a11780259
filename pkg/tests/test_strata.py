from fractions import Fraction as F

import pytest

from strataflow.exactalg import MultiPoly, hvar
from strataflow.strata import (
    InconsistentTruncationError,
    StratumSpec,
    StructureConstantTable,
    WindowExceededError,
    associativity_suite,
    basis_series,
    derive_relations,
    general_g0_closed_forms,
    half_binomial,
    structure_constants,
    symmetry_check_g0,
    verify_associativity,
)


def test_spec_validation():
    with pytest.raises(InconsistentTruncationError):
        StratumSpec(1, window=1)
    with pytest.raises(InconsistentTruncationError):
        StratumSpec(1, window=13, depth=-3)
    spec = StratumSpec(1)
    assert spec.window == 13 and spec.depth == -23


def test_basis_series_shapes():
    spec = StratumSpec(0, window=7)
    series = basis_series(spec)
    p1 = series[1]
    assert p1.coefficient(1) == MultiPoly.const(1)
    assert p1.coefficient(-1) == hvar(1, 1)
    assert p1.coefficient(-3) == hvar(1, 3)
    assert series[0].coefficient(0) == MultiPoly.const(1)
    assert series[2].coefficient(2) == MultiPoly.const(1)

    spec1 = StratumSpec(1, window=9)
    p3 = basis_series(spec1)[3]
    assert p3.coefficient(1) == hvar(3, -1)  # one positive sub-leading power
    for n in p3.exponents():
        assert n % 2 == 1  # no even powers in an odd basis element


# transcription of the printed relation tables, used as golden fixtures
G0_LINES = [
    (hvar(3, 1), -F(3, 2) * hvar(1, 1) ** 2),
    (hvar(5, 1), F(5, 2) * hvar(1, 1) ** 3),
    (hvar(3, 3), hvar(1, 1) ** 3),
    (hvar(7, 1), -F(35, 8) * hvar(1, 1) ** 4),
]

G0_LOWEST = [
    hvar(1, 1) ** 2 + 2 * hvar(1, 3),
    hvar(1, 5) + hvar(1, 3) * hvar(1, 1),
    hvar(3, 3) - 3 * hvar(1, 5) - 3 * hvar(1, 3) * hvar(1, 1) - hvar(1, 1) ** 3,
    2 * hvar(1, 7) + 2 * hvar(1, 5) * hvar(1, 1) + hvar(1, 3) ** 2,
]

H3m1, H31, H33 = hvar(3, -1), hvar(3, 1), hvar(3, 3)
G1_LINES = [
    (hvar(5, -1), H31 - H3m1 ** 2),
    (hvar(5, 1), -H3m1 * H31 + H33),
    (hvar(5, 3), -F(1, 2) * H31 ** 2 - 2 * H33 * H3m1),
    (hvar(7, -1), -2 * H3m1 * H31 + H33 + H3m1 ** 3),
    (hvar(7, 1), -F(3, 2) * H31 ** 2 + H31 * H3m1 ** 2 - 2 * H33 * H3m1),
    (hvar(7, 3), H3m1 * H31 ** 2 + 3 * H33 * H3m1 ** 2 - 2 * H31 * H33),
]

G1_ANOMALIES = [
    5 * hvar(3, 5) - 3 * hvar(5, 3) - (-(H31 ** 2) + H33 * H3m1),
    7 * hvar(3, 7) - 3 * hvar(7, 3)
    - (F(1, 2) * H3m1 * H31 ** 2 - 2 * H33 * H3m1 ** 2 - H31 * H33),
    9 * hvar(3, 9) - 3 * hvar(9, 3) - (3 * H33 * H3m1 ** 3 + F(3, 2) * H31 ** 3),
    7 * hvar(5, 7) - 5 * hvar(7, 5)
    - (H33 * H3m1 ** 3 - F(3, 2) * H31 ** 3 + H31 * H33 * H3m1
       + F(1, 2) * H3m1 ** 2 * H31 ** 2 - H33 ** 2),
]

H5m3, H5m1, H51, H53, H55 = (hvar(5, k) for k in (-3, -1, 1, 3, 5))
G2_LINES = [
    (hvar(7, -3), H5m1 - H5m3 ** 2),
    (hvar(7, -1), H51 - H5m3 * H5m1),
    (hvar(7, 1), H53 - H5m3 * H51),
    (hvar(7, 3), H55 - H53 * H5m3),
    (hvar(7, 5), -H5m1 * H53 - F(1, 2) * H51 ** 2 - 2 * H55 * H5m3),
    (hvar(9, -3), H51 - 2 * H5m3 * H5m1 + H5m3 ** 3),
    (hvar(9, -1), -H5m1 ** 2 + H5m1 * H5m3 ** 2 + H53 - H5m3 * H51),
    (hvar(9, 1), H55 - H53 * H5m3 - H51 * H5m1 + H51 * H5m3 ** 2),
    (hvar(9, 3), -2 * H5m1 * H53 + H53 * H5m3 ** 2 - F(1, 2) * H51 ** 2 - 2 * H55 * H5m3),
    (hvar(9, 5), -2 * H5m1 * H55 + 3 * H55 * H5m3 ** 2 + 2 * H5m3 * H5m1 * H53
     + H5m3 * H51 ** 2 - H53 * H51),
]


@pytest.mark.parametrize("genus,lines", [(0, G0_LINES), (1, G1_LINES), (2, G2_LINES)])
def test_printed_relations_reduce_to_zero(rs13, genus, lines):
    rs = rs13[genus]
    for lhs, rhs in lines:
        assert rs.reduce(lhs - rhs).is_zero, lhs.canonical_str()


def test_g0_lowest_relations(rs13):
    for rel in G0_LOWEST:
        assert rs13[0].reduce(rel).is_zero


def test_g1_anomaly_relations(rs13):
    for rel in G1_ANOMALIES:
        assert rs13[1].reduce(rel).is_zero


def test_generator_counts():
    for g in (0, 1, 2, 3):
        spec = StratumSpec(g, window=2 * g + 3)
        rs = derive_relations(spec)
        assert len(rs.generators) == 2 * g + 1
        assert not rs.residual_relations


def test_g0_closed_forms(rs13):
    assert general_g0_closed_forms(1).is_zero
    assert general_g0_closed_forms(2) == hvar(3, 1) + F(3, 2) * hvar(1, 1) ** 2
    assert general_g0_closed_forms(3) == hvar(5, 1) - F(5, 2) * hvar(1, 1) ** 3
    for k in range(1, 7):
        assert rs13[0].reduce(general_g0_closed_forms(k)).is_zero


def test_half_binomial_values():
    assert half_binomial(1) == F(1, 2)
    assert half_binomial(2) == -F(1, 8)
    assert half_binomial(3) == F(1, 16)


def test_symmetry_check_g0(rs13):
    rs = rs13[0]
    assert rs.reduce(3 * hvar(1, 3) - hvar(3, 1)).is_zero
    assert rs.reduce(7 * hvar(1, 1) - 1 * hvar(1, 1) * 7).is_zero  # j = k
    report = symmetry_check_g0(rs, 9)
    assert report.ok and report.checked == 15


def test_structure_constants_g0(spec13, rs13):
    table = structure_constants(spec13[0], rs13[0], pairs=[(1, 1), (0, 3), (2, 3)])
    row = table.row(1, 1)
    assert row[2] == MultiPoly.const(1)
    assert row[0] == 2 * hvar(1, 1)
    assert not table.expansion_residuals
    # unit element: p0 * p3 = p3
    assert table.row(0, 3) == {3: MultiPoly.const(1)}


def test_even_even_delta(table13):
    for g in (0, 1, 2):
        row = table13[g].row(4, 6)
        assert row == {10: MultiPoly.const(1)}


def test_even_odd_formula(rs13, table13, spec13):
    # C^{2l+1}_{2n, 2m+1} = delta + H^{2m+1}_{2(n-l)-1} in reduced form
    for g in (0, 1):
        table = table13[g]
        rs = rs13[g]
        n, odd = 2, 2 * g + 1
        row = table.row(2 * n, odd)
        m = (odd - 1) // 2
        for l2, entry in row.items():
            l = (l2 - 1) // 2
            expect = MultiPoly.const(1) if l == n + m else MultiPoly.zero()
            idx = 2 * (n - l) - 1
            if idx >= 1 - 2 * g:
                name = f"H[{odd}][{idx}]"
                expect = expect + (rs.solved.get(name) or MultiPoly.var(name))
            assert (entry - expect).is_zero


def test_elimination_matches_formula_route(spec13, rs13):
    table_elim = structure_constants(spec13[1], rs13[1])
    table_form = StructureConstantTable(spec13[1], rs13[1])
    for key, row in table_elim.entries.items():
        frow = table_form.row(*key)
        assert set(row) == set(frow)
        for l in row:
            assert (row[l] - frow[l]).is_zero


def test_odd_products_close_on_even_orders(table13, spec13):
    # the closure property: odd-odd products re-expand over even orders only
    for g in (0, 1, 2):
        odd = [j for j in spec13[g].odd_indices() if j <= 13]
        for i, j in zip(odd, odd[1:]):
            assert all(l % 2 == 0 for l in table13[g].row(i, j))


def test_window_exceeded(spec13, rs13):
    with pytest.raises(WindowExceededError):
        structure_constants(spec13[0], rs13[0], pairs=[(10, 13)])


def test_associativity_small_sweeps(table13, rs13, spec13):
    for g in (0, 1):
        idx = spec13[g].basis_indices(6)
        report = verify_associativity(table13[g], rs13[g], idx)
        assert report.ok
    # unit-element quadruple is trivially associative
    rep0 = verify_associativity(table13[0], rs13[0], [0])
    assert rep0.ok


def test_associativity_suite_spot():
    report = associativity_suite(1, 7)
    assert report.ok and report.checked > 0
