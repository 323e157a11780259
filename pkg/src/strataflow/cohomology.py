"""Tangent-space pairings of the coefficient varieties and their checks.

Linearizing the triangular relation set produces the tangent relation set:
each solved coefficient acquires a companion symbol whose solved form is
the exact formal derivative.  The symmetric bilinear pairing on basis
elements is the derivative of the structure constants; this module checks
its defining identity, the statement that it is the boundary of a linear
map, and the square identity tying the pairing on the first odd element to
that map, all exactly.  It also evaluates the explicit solution-borne
pairings numerically on gridded solutions of the derived flows.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import numpy as np

from .exactalg import (
    LaurentSeries,
    MultiPoly,
    RelationSet,
    d_symbol,
    h_symbol,
)
from .numerics import ShapeMismatchError
from .strata import (
    CheckReport,
    StratumSpec,
    StructureConstantTable,
    _Packer,
    _packed_mul_acc,
    basis_series,
    derive_rows,
    even_series,
)


class IndexBelowStratumError(ValueError):
    """A coboundary was requested at an order the stratum does not carry."""


def _h_to_d(name: str) -> str:
    if not name.startswith("H["):
        raise ValueError(f"{name} is not a coefficient symbol")
    return "D" + name[1:]


class TangentRelationSet:
    """Base relations plus their formal linearization.

    The companion of each solved symbol is solved as the derivative of its
    right-hand side; companions of generators stay free.  ``derivative``
    maps a generator polynomial to its linearization, and ``reduce``
    normalizes polynomials containing both coefficient and companion
    symbols.
    """

    def __init__(self, base: RelationSet):
        self.base = base
        self.dgens = [_h_to_d(gname) for gname in base.generators]
        dsolved = {}
        for var, rhs in base.solved.items():
            total = MultiPoly.zero()
            for gname, dname in zip(base.generators, self.dgens):
                total = total + rhs.diff(gname) * MultiPoly.var(dname)
            dsolved[_h_to_d(var)] = total
        # companion relations are linear in the companions with coefficient
        # polynomials in the generators, so reduction needs both alphabets
        self.linearized = dsolved
        self._dpower_cache: dict = {}

    def derivative(self, poly: MultiPoly) -> MultiPoly:
        """Formal derivative of a generator polynomial along the companions."""
        total = MultiPoly.zero()
        for gname, dname in zip(self.base.generators, self.dgens):
            total = total + poly.diff(gname) * MultiPoly.var(dname)
        return total

    def reduce(self, poly: MultiPoly, allow=None) -> MultiPoly:
        known = set(self.base.generators) | set(self.dgens)
        mapping_needed = False
        for v in poly.variables():
            if v in known:
                continue
            if v in self.linearized or v in self.base.solved:
                mapping_needed = True
            elif allow is None or not allow(v):
                raise KeyError(v)
        if mapping_needed:
            poly = poly.subs(self.linearized, power_cache=self._dpower_cache)
            poly = self.base.reduce(poly, allow=lambda v: v in known or (allow and allow(v)))
        return poly

    def reduce_series(self, s: LaurentSeries, allow=None) -> LaurentSeries:
        return s.map_coeffs(lambda c: self.reduce(c, allow=allow))


def linearize(rs: RelationSet) -> TangentRelationSet:
    return TangentRelationSet(rs)


# ---------------------------------------------------------------------------
# identity checks on the structure-constant level


def cocycle_identity_check(trs: TangentRelationSet, table: StructureConstantTable,
                           triples) -> CheckReport:
    """The four-term identity of the pairing on basis triples, exactly.

    For (a, b, c) the contraction
      sum_l [ D^l_{bc} C^r_{al} + C^l_{bc} D^r_{al}
              - D^l_{ab} C^r_{cl} - C^l_{ab} D^r_{lc} ]
    must be the zero polynomial in generators and companions for every r.
    """
    report = CheckReport()
    packer = _Packer(trs.base.generators + trs.dgens)
    rows: dict = {}
    drows: dict = {}

    def prow(i: int, j: int):
        key = (min(i, j), max(i, j))
        got = rows.get(key)
        if got is None:
            raw = table.row(*key)
            got = {l: packer.pack(c) for l, c in raw.items()}
            drows[key] = {l: packer.pack(trs.derivative(c)) for l, c in raw.items()}
            rows[key] = got
        return got

    def pdrow(i: int, j: int):
        key = (min(i, j), max(i, j))
        if key not in drows:
            prow(i, j)
        return drows[key]

    for (a, b, c) in triples:
        acc: dict = {}
        for l, d_bc in pdrow(b, c).items():
            for r, c_al in prow(a, l).items():
                _packed_mul_acc(acc.setdefault(r, {}), d_bc, c_al, 1)
        for l, c_bc in prow(b, c).items():
            for r, d_al in pdrow(a, l).items():
                _packed_mul_acc(acc.setdefault(r, {}), c_bc, d_al, 1)
        for l, d_ab in pdrow(a, b).items():
            for r, c_cl in prow(c, l).items():
                _packed_mul_acc(acc.setdefault(r, {}), d_ab, c_cl, -1)
        for l, c_ab in prow(a, b).items():
            for r, d_lc in pdrow(l, c).items():
                _packed_mul_acc(acc.setdefault(r, {}), c_ab, d_lc, -1)
        report.checked += 1
        for r, poly in sorted(acc.items()):
            cleaned = {mo: coeff for mo, coeff in poly.items() if coeff != 0}
            if cleaned:
                report.add_failure("cocycle-identity", (a, b, c, r), packer.unpack(cleaned))
    return report


# ---------------------------------------------------------------------------
# series-level objects


def representable_pairs(spec: StratumSpec, limit: int) -> list:
    """Basis pairs up to ``limit`` whose expansion stays inside the window.

    Mixed-parity products re-expand over odd orders up to the index sum, so
    those pairs are admitted only when the sum fits; same-parity products
    stay on even orders and always fit.
    """
    idx = spec.basis_indices(limit)
    out = []
    for a_pos, j in enumerate(idx):
        for k in idx[a_pos:]:
            if j % 2 != k % 2 and j + k > spec.window:
                continue
            out.append((j, k))
    return out


def pairing_series(trs: TangentRelationSet, table: StructureConstantTable,
                   series: Mapping[int, LaurentSeries], j: int, k: int) -> LaurentSeries:
    """The pairing of two basis elements as a truncated series."""
    from .strata import WindowExceededError

    total: LaurentSeries | None = None
    for l, centry in table.row(j, k).items():
        if l % 2 == 0:
            base = even_series(l // 2)
        elif l in series:
            base = series[l]
        else:
            raise WindowExceededError(
                f"pairing of ({j},{k}) needs the odd order {l} beyond the window")
        term = base.scale(trs.derivative(centry))
        total = term if total is None else total + term
    if total is None:
        depth = min(s.min_exp for s in series.values())
        return LaurentSeries.zero(depth, 0, tail_exact=True)
    return total


def coboundary_series(trs: TangentRelationSet, spec: StratumSpec, k: int) -> LaurentSeries:
    """The linear map applied to an odd basis element, as a series.

    f(p_{2k+1}) = sum_m D[2k+1][2m+1] z^{-(2m+1)}, companions reduced.
    Orders below the first odd index of the stratum raise
    :class:`IndexBelowStratumError`; even orders map to zero.
    """
    j = 2 * k + 1
    if j < spec.first_odd:
        raise IndexBelowStratumError(f"order {j} below the stratum's first odd order")
    g = spec.genus
    coeffs: dict[int, MultiPoly] = {}
    m = -g
    while -(2 * m + 1) >= spec.depth:
        name = d_symbol(j, 2 * m + 1)
        poly = MultiPoly.var(name)
        poly = trs.reduce(poly)
        coeffs[-(2 * m + 1)] = poly
        m += 1
    return LaurentSeries(coeffs, spec.depth, 2 * g - 1, tail_exact=False)


def coboundary_map(trs: TangentRelationSet, spec: StratumSpec, order: int) -> LaurentSeries:
    """f on any basis order: zero on evens, the companion series on odds."""
    if order % 2 == 0:
        return LaurentSeries.zero(spec.depth, 0, tail_exact=True)
    return coboundary_series(trs, spec, (order - 1) // 2)


def coboundary_property_check(trs: TangentRelationSet, table: StructureConstantTable,
                              spec: StratumSpec, pairs) -> CheckReport:
    """psi(a,b) = a f(b) + b f(a) - f(ab) as truncated series, exactly.

    The product side re-expands through the structure constants, so the
    identity holds modulo the ideal automatically; coefficients reduce to
    zero within the reliable window.
    """
    series = basis_series(spec)
    report = CheckReport()
    fcache: dict[int, LaurentSeries] = {}

    def f_of(order: int) -> LaurentSeries:
        got = fcache.get(order)
        if got is None:
            got = coboundary_map(trs, spec, order)
            fcache[order] = got
        return got

    def base(order: int) -> LaurentSeries:
        return series[order] if order in series else even_series(order // 2)

    for (j, k) in pairs:
        lhs = pairing_series(trs, table, series, j, k)
        rhs = base(j) * f_of(k) + base(k) * f_of(j)
        for l, centry in table.row(j, k).items():
            rhs = rhs - f_of(l).scale(centry)
        diff = trs.reduce_series(lhs - rhs)
        report.checked += 1
        if not diff.is_zero:
            bad = {n: c.canonical_str() for n, c in diff.coeffs.items()}
            report.add_failure("coboundary-property", (j, k),
                               MultiPoly.from_string(next(iter(bad.values()))))
    return report


def square_identity_check(trs: TangentRelationSet, table: StructureConstantTable,
                          spec: StratumSpec, orders) -> CheckReport:
    """psi(p, p) = 2 p f(p) on odd orders, as truncated series."""
    series = basis_series(spec)
    report = CheckReport()
    for j in orders:
        lhs = pairing_series(trs, table, series, j, j)
        rhs = (series[j] * coboundary_series(trs, spec, (j - 1) // 2)).scale(2)
        diff = trs.reduce_series(lhs - rhs)
        report.checked += 1
        if not diff.is_zero:
            n = next(iter(diff.coeffs))
            report.add_failure("square-identity", (j, n), diff.coeffs[n])
    return report


# ---------------------------------------------------------------------------
# explicit tangent vectors


@dataclass
class CocycleTable:
    """Pairing and linear-map values along one tangent direction."""

    entries: dict = field(default_factory=dict)     # (j, k) -> LaurentSeries
    coboundary: dict = field(default_factory=dict)  # j -> LaurentSeries

    def entry(self, j: int, k: int) -> LaurentSeries:
        return self.entries[(min(j, k), max(j, k))]


def vector_field_realization(trs: TangentRelationSet, direction: Mapping[str, object],
                             spec: StratumSpec, table: StructureConstantTable,
                             pairs) -> CocycleTable:
    """Evaluate the pairing along a concrete direction on the generators.

    ``direction`` assigns a value (exact scalar or polynomial) to each
    generator; companions of solved symbols follow by the chain rule.  The
    table entry for (j, k) is sum_l X(C_{jk}^l) p_l with X the induced
    derivation, and the linear map is the directional series.
    """
    dsubs = {}
    for gname, dname in zip(trs.base.generators, trs.dgens):
        val = direction.get(gname, 0)
        dsubs[dname] = val if isinstance(val, MultiPoly) else MultiPoly.const(val)
    series = basis_series(spec)
    out = CocycleTable()
    for (j, k) in pairs:
        entry = pairing_series(trs, table, series, j, k).map_coeffs(
            lambda c: c.subs(dsubs))
        out.entries[(min(j, k), max(j, k))] = entry
    orders = sorted({i for p in pairs for i in p})
    for j in orders:
        out.coboundary[j] = coboundary_map(trs, spec, j).map_coeffs(
            lambda c: c.subs(dsubs))
    return out


# ---------------------------------------------------------------------------
# numeric pairings on gridded solutions: big-cell case


def bh_closed_form(rs: RelationSet, a: int, b: int) -> tuple[Fraction, int]:
    """Coefficient and power of the big-cell closed form H[a][b] = c u^w."""
    name = h_symbol(a, b)
    if name in rs.generators:
        return Fraction(1), 1
    poly = rs.solved[name]
    if poly.is_zero:
        return Fraction(0), 0
    [(mono, coeff)] = poly.terms.items()
    power = mono[0][1] if mono else 0
    return coeff, power


def bh_variation_jets(u: np.ndarray, ux: np.ndarray, max_index: int,
                      alphas: Mapping[int, float] | None = None,
                      rs: RelationSet | None = None):
    """First and second jets of the variation of the potential, on the grid.

    The big-cell mixed second derivatives of the potential are closed-form
    polynomials of the single field, so every jet of the variation
    Delta F = sum alpha_m dF/dx_{2m+1} is a polynomial in (u, u_x).
    Returns ``(first, second)`` with ``first[m]`` the array of
    d(Delta F)/dx_{2m+1} and ``second[(a, b)]`` the mixed second arrays.
    """
    if alphas is None:
        alphas = {1: 1.0}
    if rs is None:
        rs = derive_rows(0, max_row=2 * max_index + 3, pair_sum=4 * max_index + 8)
    u = np.asarray(u, dtype=float)
    ux = np.asarray(ux, dtype=float)
    if u.shape != ux.shape:
        raise ShapeMismatchError("field and gradient arrays differ in shape")

    def f_ab(a: int, b: int) -> np.ndarray:
        c, w = bh_closed_form(rs, a, b)
        return -b * float(c) * u ** w

    def df_ab_du(a: int, b: int) -> np.ndarray:
        c, w = bh_closed_form(rs, a, b)
        return -b * float(c) * w * u ** (w - 1) if w else np.zeros_like(u)

    def u_time(m: int) -> np.ndarray:
        # du/dx_{2m+1} = (m+1) c_{m+1} u^m u_x via the scalar hierarchy
        k = m + 1
        from .strata import half_binomial
        coeff = float(Fraction(2 ** k * k * (2 * k - 1)) * half_binomial(k))
        return coeff * u ** m * ux

    odd = list(range(1, 2 * max_index + 2, 2))
    first = {}
    for a in odd:
        total = np.zeros_like(u)
        for m, alpha in alphas.items():
            total = total + alpha * f_ab(a, 2 * m + 1)
        first[a] = total
    second = {}
    for a in odd:
        for b in odd:
            total = np.zeros_like(u)
            for m, alpha in alphas.items():
                total = total + alpha * df_ab_du(a, b) * u_time(m)
            second[(a, b)] = total
    return first, second


def numeric_cocycle_g0(second_jets: Mapping[tuple, np.ndarray], j: int, k: int):
    """z^{2l}-coefficient arrays of the big-cell pairing on two odd elements.

    Evaluates the solution-borne pairing: the coefficient of z^{2l} is
    minus the sum of the two weighted mixed second jets of the variation,
    each term present while its coordinate index stays positive.
    """
    shapes = {a.shape for a in second_jets.values()}
    if len(shapes) > 1:
        raise ShapeMismatchError("jet arrays must share one shape")
    out: dict[int, np.ndarray] = {}
    for l in range(1, max(j, k) + 1):
        total = None
        if l <= j:
            idx = 2 * (j - l) + 1
            term = second_jets[(2 * k + 1, idx)] / idx
            total = term if total is None else total + term
        if l <= k:
            idx = 2 * (k - l) + 1
            term = second_jets[(2 * j + 1, idx)] / idx
            total = term if total is None else total + term
        if total is not None:
            out[2 * l] = -total
    return out


def numeric_coboundary_g0(first_jets: Mapping[int, np.ndarray]):
    """Coefficient arrays of the vertex-operator form of the linear map.

    Returns a map from m to the array multiplying z^{-(2m+1)}, one entry
    per supplied first jet of the variation.
    """
    return {(a - 1) // 2: arr for a, arr in first_jets.items() if a >= 3}


def sup_cocycle_g0(u: np.ndarray, ux: np.ndarray, j: int = 1, k: int = 1,
                   rs: RelationSet | None = None) -> tuple[float, float]:
    """Sup of the pairing coefficients and of the linear map on a state."""
    first, second = bh_variation_jets(u, ux, max_index=max(j, k), rs=rs)
    psi = numeric_cocycle_g0(second, j, k)
    fmap = numeric_coboundary_g0(first)
    sup_psi = max(float(np.max(np.abs(a))) for a in psi.values())
    sup_f = max(float(np.max(np.abs(a))) for a in fmap.values())
    return sup_psi, sup_f


# ---------------------------------------------------------------------------
# numeric pairings: elliptic case


def numeric_cocycle_g1(ds_jets: Mapping[tuple, np.ndarray],
                       h_values: Mapping[tuple, np.ndarray], n: int, m: int):
    """lambda-coefficient arrays of the elliptic pairing on odd elements.

    ``ds_jets[(i, j)]`` holds d(Delta S_i)/dx_j; ``h_values[(row, idx)]``
    the coefficient arrays.  Indices follow the odd labels 2n+1 and 2m+1.
    """
    shapes = {a.shape for a in ds_jets.values()}
    if len(shapes) > 1:
        raise ShapeMismatchError("jet arrays must share one shape")
    jn, jm = 2 * n + 1, 2 * m + 1
    sample = next(iter(ds_jets.values()))
    out: dict[int, np.ndarray] = {}

    def add(power: int, arr):
        if power in out:
            out[power] = out[power] + arr
        else:
            out[power] = np.zeros_like(sample) + arr

    for k in range(-1, m + 1):
        add(m - k, ds_jets[(2 * k + 1, jn)])
    for k in range(-1, n + 1):
        add(n - k, ds_jets[(2 * k + 1, jm)])
    add(1, ds_jets[(-1, jn)] * h_values[(jm, -1)] + ds_jets[(-1, jm)] * h_values[(jn, -1)])
    add(0, ds_jets[(-1, jm)] * h_values[(jn, 1)] + ds_jets[(1, jm)] * h_values[(jn, -1)]
        + ds_jets[(-1, jn)] * h_values[(jm, 1)] + ds_jets[(1, jn)] * h_values[(jm, -1)])
    return out


def dnls_cocycle_from_state(u: np.ndarray, v: np.ndarray,
                            du: np.ndarray, dv: np.ndarray):
    """Reduced elliptic pairing on (p3, p3) from a two-field state.

    (du, dv) is the variation of the state, e.g. the space translation
    (u_x, v_x); returns the lambda^2 and lambda^1 coefficient arrays.
    """
    arrays = [np.asarray(a, dtype=float) for a in (u, v, du, dv)]
    if len({a.shape for a in arrays}) > 1:
        raise ShapeMismatchError("state and variation arrays must share one shape")
    u, v, du, dv = arrays
    return -du, -dv + 0.5 * u * du


def dnls_cocycle_p3p3(phi: np.ndarray, dx3: float, dx5: float,
                      dphi: np.ndarray | None = None):
    """The reduced elliptic pairing on (p3, p3) from a bilinear potential.

    Returns (lambda^2 array, lambda^1 array) = (-Delta u, -Delta v +
    u Delta u / 2) with u, v read off the potential's second derivatives
    and the variation defaulting to the x3-translation of the potential.
    """
    phi = np.asarray(phi, dtype=float)
    if phi.ndim != 2 or min(phi.shape) < 7:
        raise ShapeMismatchError("need a 2-D potential array of at least 7x7")

    def d1(a, dx, axis):
        return (-np.roll(a, -2, axis) + 8 * np.roll(a, -1, axis)
                - 8 * np.roll(a, 1, axis) + np.roll(a, 2, axis)) / (12 * dx)

    def d2(a, dx, axis):
        return (-np.roll(a, -2, axis) + 16 * np.roll(a, -1, axis) - 30 * a
                + 16 * np.roll(a, 1, axis) - np.roll(a, 2, axis)) / (12 * dx * dx)

    if dphi is None:
        dphi = d1(phi, dx3, 0)
        trim = 4
    else:
        dphi = np.asarray(dphi, dtype=float)
        if dphi.shape != phi.shape:
            raise ShapeMismatchError("variation array must match the potential")
        trim = 2
    p33 = d2(phi, dx3, 0)
    p35 = d1(d1(phi, dx3, 0), dx5, 1)
    v33 = d2(dphi, dx3, 0)
    v35 = d1(d1(dphi, dx3, 0), dx5, 1)
    u = p35 / p33
    du = v35 / p33 - p35 * v33 / p33 ** 2
    dv = -2.0 * v33
    lam2 = (-du)[trim:-trim, trim:-trim]
    lam1 = (-dv + 0.5 * u * du)[trim:-trim, trim:-trim]
    return lam2, lam1
