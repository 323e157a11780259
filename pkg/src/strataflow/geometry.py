"""Curve-level quantities attached to a stratum point.

From the 2g+1 free coefficients of the first odd basis series this module
computes the hyperelliptic curve coefficients, the degree-3 moduli and
discriminant (genus one), the induced metric and curvature of the
three-dimensional coefficient variety, the ideal basis of the curve
family, and the Poisson-ideal (coisotropy) verification under the
canonical bracket with the coefficients depending on the deformation
coordinates.

All functions accept exact scalars, floats, or polynomials wherever that
makes sense; the discriminant is computed canonically from a resultant,
with the closed-form expressions kept as labelled cross-checks because the
two printed variants disagree by a factor in one coefficient.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .exactalg import (
    LAM,
    MultiPoly,
    RelationSet,
    h_symbol,
    hvar,
    p_symbol,
    u_symbol,
)
from .strata import (
    CheckReport,
    StratumSpec,
    derive_relations,
    derive_rows,
    flow_jacobian,
)


class DegenerateMetricError(ZeroDivisionError):
    """Curvature requested where the metric determinant vanishes."""


# ---------------------------------------------------------------------------
# curve coefficients


@dataclass
class CurveCoeffs:
    """Coefficients u_0..u_{2g} of p^2 = lam^{2g+1} + sum u_k lam^k."""

    genus: int
    u: list

    def __post_init__(self):
        if len(self.u) != 2 * self.genus + 1:
            raise ValueError(f"expected {2 * self.genus + 1} coefficients")


def generator_symbols(g: int) -> list[str]:
    return [h_symbol(2 * g + 1, k) for k in range(1 - 2 * g, 2 * g + 2, 2)]


def u_polynomials(g: int) -> list[MultiPoly]:
    """u_k as polynomials in the generators, by squaring the series head.

    Only the generator part of the first odd series can reach non-negative
    powers when squared, so the curve coefficients involve nothing else.
    Returned in ascending order u_0 .. u_{2g}.
    """
    head: dict[int, MultiPoly] = {2 * g + 1: MultiPoly.const(1)}
    for k in range(1 - 2 * g, 2 * g + 2, 2):
        head[-k] = hvar(2 * g + 1, k)
    square: dict[int, MultiPoly] = {}
    for na, pa in head.items():
        for nb, pb in head.items():
            n = na + nb
            if n < 0 or n % 2:
                continue
            prod = pa * pb
            s = square.get(n)
            square[n] = prod if s is None else s + prod
    return [square.get(2 * s, MultiPoly.zero()) for s in range(0, 2 * g + 1)]


def curve_from_H(g: int, values) -> CurveCoeffs:
    """Curve coefficients from the generator values, exact or numeric.

    ``values`` lists the 2g+1 generator coefficients in ascending index
    order (the same order as the relation-set generators), as exact
    scalars, floats, arrays, or polynomials.
    """
    values = list(values)
    names = generator_symbols(g)
    if len(values) != len(names):
        raise ValueError(f"expected {len(names)} generator values")
    polys = u_polynomials(g)
    exact = all(isinstance(v, (int, Fraction)) for v in values)
    if exact:
        env = dict(zip(names, (Fraction(v) for v in values)))
        return CurveCoeffs(g, [p.eval_exact(env) for p in polys])
    if all(isinstance(v, MultiPoly) for v in values):
        mapping = dict(zip(names, values))
        return CurveCoeffs(g, [p.subs(mapping) for p in polys])
    env = dict(zip(names, values))
    return CurveCoeffs(g, [p.eval_num(env) for p in polys])


# ---------------------------------------------------------------------------
# genus-one moduli and discriminant


@dataclass
class EllipticModuli:
    g2: object
    g3: object
    discriminant: object
    cross_checks: dict = field(default_factory=dict)


def _det(matrix) -> object:
    """Cofactor determinant, generic over exact scalars and polynomials."""
    n = len(matrix)
    if n == 1:
        return matrix[0][0]
    total = None
    for col in range(n):
        entry = matrix[0][col]
        if isinstance(entry, (int, float, Fraction)) and entry == 0:
            continue
        if isinstance(entry, MultiPoly) and entry.is_zero:
            continue
        minor = [row[:col] + row[col + 1:] for row in matrix[1:]]
        term = entry * _det(minor)
        if col % 2:
            term = -term
        total = term if total is None else total + term
    if total is None:
        total = matrix[0][0] * 0
    return total


def cubic_resultant_discriminant(u2, u1, u0):
    """Discriminant of lam^3 + u2 lam^2 + u1 lam + u0 via the resultant.

    disc = -Res(P, P') for a monic cubic; the Sylvester determinant is
    expanded exactly, so this serves as the independent canonical route
    against which the closed forms are checked.
    """
    zero = u2 * 0
    one = zero + 1
    rows = [
        [one, u2, u1, u0, zero],
        [zero, one, u2, u1, u0],
        [one * 3, u2 * 2, u1, zero, zero],
        [zero, one * 3, u2 * 2, u1, zero],
        [zero, zero, one * 3, u2 * 2, u1],
    ]
    return -_det(rows)


def elliptic_discriminant(u2, u1, u0):
    """Canonically normalized discriminant: 16 times the cubic resultant form."""
    return cubic_resultant_discriminant(u2, u1, u0) * 16


def moduli_and_discriminant(c: CurveCoeffs) -> EllipticModuli:
    """Degree-3 moduli of a genus-one curve plus the discriminant.

    The discriminant is the resultant-based one.  The closed forms
    -16(4 g2^3 + 27 g3^2) (which matches the resultant identically) and
    -16(2 g2^3 + 27 g3^2) (as printed in the source narrative) are both
    evaluated; the second disagrees and is reported, not adopted.
    """
    if c.genus != 1:
        raise ValueError("moduli are defined here for genus one")
    u0, u1, u2 = c.u
    third = Fraction(1, 3)
    g2 = u1 - u2 * u2 * third
    g3 = u0 + u2 * u2 * u2 * Fraction(2, 27) - u1 * u2 * third
    delta = elliptic_discriminant(u2, u1, u0)
    closed4 = (g2 * g2 * g2 * 4 + g3 * g3 * 27) * -16
    closed2 = (g2 * g2 * g2 * 2 + g3 * g3 * 27) * -16
    checks = {
        "closed_form_coeff4": closed4,
        "closed_form_coeff2": closed2,
        "coeff4_matches_resultant": _is_same(delta, closed4),
        "coeff2_matches_resultant": _is_same(delta, closed2),
    }
    if _is_same(u0, u0 * 0):
        checks["u0_zero_form"] = (u1 * u1) * (u2 * u2 - u1 * 4) * 16
        checks["u0_zero_matches_resultant"] = _is_same(delta, checks["u0_zero_form"])
    return EllipticModuli(g2, g3, delta, checks)


def _is_same(a, b) -> bool:
    diff = a - b
    if isinstance(diff, MultiPoly):
        return diff.is_zero
    if isinstance(diff, float):
        scale = max(abs(float(a)), abs(float(b)), 1.0)
        return abs(diff) <= 1e-12 * scale
    return diff == 0


# ---------------------------------------------------------------------------
# induced metric and curvature of the three-dimensional coefficient variety


@dataclass
class MetricCurvature:
    metric: list
    R1212: object
    R1213: object
    R1223: object
    R1313: object
    D: object


def metric_W1c(y1, y2, y3) -> list:
    """Induced metric on the genus-one coefficient variety, as printed."""
    g11 = 1 + 4 * y1 * y1 + y2 * y2 + 4 * y3 * y3
    g22 = 2 + y1 * y1 + y2 * y2
    g33 = 2 + 4 * y1 * y1
    g12 = -2 * y1 + y1 * y2 + 2 * y2 * y3
    g13 = -y2 + 4 * y1 * y3
    g23 = -y1 + 2 * y1 * y2
    return [[g11, g12, g13], [g12, g22, g23], [g13, g23, g33]]


def w1c_embedding(y1, y2, y3) -> tuple:
    """The three dependent coefficients as functions of the independent ones."""
    return (y2 - y1 * y1, y3 - y1 * y2, y2 * y2 * Fraction(-1, 2) - 2 * y1 * y3)


def metric_and_curvature_W1c(y1, y2, y3) -> MetricCurvature:
    """Metric, curvature components, and denominator exactly as printed."""
    D = (4 + 4 * y2 ** 2 + 17 * y1 ** 2 - 4 * y1 * y2 ** 2 * y3 + 32 * y1 * y2 * y3
         + 16 * y3 ** 2 + y2 ** 4 + 24 * y1 ** 2 * y2 ** 2 + 8 * y1 ** 2 * y2
         + 32 * y1 ** 4 * y2 + 16 * y1 ** 6 + 4 * y3 ** 2 * y1 ** 2 + 24 * y1 ** 4
         + 16 * y1 ** 3 * y3)
    if _is_same(D, D * 0):
        raise DegenerateMetricError("metric determinant vanishes at this point")
    n1212 = (-2 - y2 ** 2 - 16 * y1 * y3 + 4 * y2 - 8 * y1 ** 2 - 12 * y1 * y2 * y3
             - 8 * y3 ** 2 - 8 * y1 ** 2 * y2 - 16 * y1 ** 4 - 8 * y1 ** 3 * y3
             + 2 * y2 ** 3)
    n1213 = (2 * y1 * y2 - 8 * y1 + 8 * y2 * y3 + 8 * y1 ** 2 * y3 + 4 * y1 * y2 ** 2
             - 16 * y1 ** 3 + 8 * y1 ** 3 * y2)
    n1223 = -8 - 18 * y1 ** 2 - 8 * y1 ** 4 - 4 * y2 ** 2 - 8 * y1 ** 2 * y2
    n1313 = -16 - 8 * y2 ** 2 - 36 * y1 ** 2 - 16 * y1 ** 2 * y2 - 16 * y1 ** 4
    if isinstance(D, (int, Fraction)):
        inv = Fraction(1) / Fraction(D)
    else:
        inv = 1.0 / D
    return MetricCurvature(
        metric=metric_W1c(y1, y2, y3),
        R1212=n1212 * inv, R1213=n1213 * inv, R1223=n1223 * inv, R1313=n1313 * inv,
        D=D,
    )


# ---------------------------------------------------------------------------
# ideal basis and the reduction of the higher odd coordinates


@dataclass
class IdealBasis:
    genus: int
    curve_poly: MultiPoly
    m_polys: list


_RS_CACHE: dict[tuple, RelationSet] = {}


def _rows_for(g: int, max_row: int) -> RelationSet:
    key = (g, max_row)
    rs = _RS_CACHE.get(key)
    if rs is None:
        rs = derive_rows(g, max_row=max_row, pair_sum=max_row + 2 * g + 3)
        _RS_CACHE[key] = rs
    return rs


def curve_polynomial(g: int) -> MultiPoly:
    """p^2 - (lam^{2g+1} + sum u_k lam^k) with u_k expanded in generators."""
    p = MultiPoly.var(p_symbol(2 * g + 1))
    poly = p * p - MultiPoly.monomial(1, [(LAM, 2 * g + 1)])
    for k, u_poly in enumerate(u_polynomials(g)):
        poly = poly - u_poly * MultiPoly.monomial(1, [(LAM, k)])
    return poly


def ideal_basis(g: int, window: int, rs: RelationSet | None = None) -> IdealBasis:
    """Curve polynomial plus the linear elements M_0 .. M_{window-1}.

    M_k = p_{2(g+k)+3} - lam * p_{2(g+k)+1} + H^{2(g+k)+1}_{1-2g} * p_{2g+1},
    with the H coefficient reduced to generator form.
    """
    if rs is None:
        rs = _rows_for(g, 2 * (g + window) + 3)
    first = 2 * g + 1
    ms = []
    for k in range(window):
        row = 2 * (g + k) + 1
        name = h_symbol(row, 1 - 2 * g)
        if name in rs.generators:
            coeff = MultiPoly.var(name)
        elif name in rs.solved:
            coeff = rs.solved[name]
        else:
            raise ValueError(f"{name} not available; derive more rows")
        m = (MultiPoly.var(p_symbol(row + 2))
             - MultiPoly.monomial(1, [(LAM, 1), (p_symbol(row), 1)])
             + coeff * MultiPoly.var(p_symbol(first)))
        ms.append(m)
    return IdealBasis(g, curve_polynomial(g), ms)


def odd_in_terms_of_first(g: int, m: int, rs: RelationSet | None = None) -> MultiPoly:
    """alpha_m(lam; generators) with p_{2m+1} = alpha_m * p_{2g+1} in the quotient.

    Obtained by running the linear ideal elements as rewrite rules from the
    top down, so it is exact whenever the relation rows are.
    """
    if m < g:
        raise ValueError("index below the stratum")
    if rs is None:
        rs = _rows_for(g, 2 * m + 1)
    first = 2 * g + 1
    alpha: dict[int, MultiPoly] = {2 * m + 1: MultiPoly.const(1)}
    # alpha maps odd order -> lam-polynomial multiplier; rewrite top order down
    for row in range(2 * m + 1, first, -2):
        coeff = alpha.pop(row, None)
        if coeff is None:
            continue
        prev = row - 2
        name = h_symbol(prev, 1 - 2 * g)
        hred = MultiPoly.var(name) if name in rs.generators else rs.solved[name]
        lam = MultiPoly.monomial(1, [(LAM, 1)])
        alpha[prev] = alpha.get(prev, MultiPoly.zero()) + coeff * lam
        alpha[first] = alpha.get(first, MultiPoly.zero()) - coeff * hred
    return alpha[first]


# ---------------------------------------------------------------------------
# jets, the canonical bracket, and coisotropy of the ideal


def base_jet_name(g: int, gen: str) -> str:
    return f"d{gen}/dx[{2 * g + 1}]"


def is_jet_symbol(name: str) -> bool:
    return name.startswith("d") and "/dx[" in name


def generator_velocities(g: int, rs: RelationSet, flow_index: int) -> list[MultiPoly]:
    """d(gen_i)/dx_{2(g+k)+1} expressed through the base jets.

    The cross-derivative symmetry of the closed one-forms turns the flow
    derivative of each generator into the base-coordinate derivative of
    the corresponding solved row entry.
    """
    gens = rs.generators
    jets = [MultiPoly.var(base_jet_name(g, gen)) for gen in gens]
    if flow_index == 0:
        return jets
    jac = flow_jacobian(StratumSpec(g, window=max(2 * (g + flow_index) + 1, 2 * g + 1)),
                        rs, flow_index)
    out = []
    for i in range(len(gens)):
        total = MultiPoly.zero()
        for jcol, jet in enumerate(jets):
            total = total + jac[i][jcol] * jet
        out.append(total)
    return out


def x_derivative(poly: MultiPoly, g: int, rs: RelationSet, flow_index: int) -> MultiPoly:
    """d/dx_{2(g+flow_index)+1} of a generator-coefficient polynomial."""
    vel = generator_velocities(g, rs, flow_index)
    total = MultiPoly.zero()
    for gen, v in zip(rs.generators, vel):
        total = total + poly.diff(gen) * v
    return total


def poisson_bracket(a: MultiPoly, b: MultiPoly, g: int, rs: RelationSet,
                    max_row: int) -> MultiPoly:
    """Canonical bracket over the pairs (x_j, p_j), odd j up to ``max_row``.

    lam is a parameter; the coefficient symbols depend on the base
    coordinates through the flow substitution rules, so d/dx_j acts by the
    chain rule through the generators.
    """
    total = MultiPoly.zero()
    for j in range(2 * g + 1, max_row + 1, 2):
        k = (j - (2 * g + 1)) // 2
        da_dp = a.diff(p_symbol(j))
        db_dp = b.diff(p_symbol(j))
        if not da_dp.is_zero:
            total = total - da_dp * x_derivative(b, g, rs, k)
        if not db_dp.is_zero:
            total = total + x_derivative(a, g, rs, k) * db_dp
    return total


def curve_reduce(poly: MultiPoly, g: int) -> MultiPoly:
    """Rewrite even powers of p_{2g+1} through the curve polynomial."""
    p_name = p_symbol(2 * g + 1)
    rhs = MultiPoly.monomial(1, [(LAM, 2 * g + 1)])
    for k, u_poly in enumerate(u_polynomials(g)):
        rhs = rhs + u_poly * MultiPoly.monomial(1, [(LAM, k)])
    out = MultiPoly.zero()
    for mono, coeff in poly.terms.items():
        e = dict(mono).get(p_name, 0)
        if e < 2:
            out = out + MultiPoly({mono: coeff})
            continue
        rest = tuple((v, x) for v, x in mono if v != p_name)
        base = MultiPoly({rest: coeff})
        out = out + base * (rhs ** (e // 2)) * (MultiPoly.var(p_name) if e % 2 else 1)
    return out


def coisotropy_check(g: int, window: int, rs: RelationSet | None = None) -> CheckReport:
    """Verify the ideal closes under the canonical bracket on the flows.

    {C, M_k} must equal minus the base-derivative of M_k's coefficient
    times C, and {M_l, M_k} must vanish, once the flow substitution rules
    replace all coordinate derivatives by base jets.
    """
    if rs is None:
        rs = _rows_for(g, 2 * (g + window) + 5)
    basis = ideal_basis(g, window, rs)
    max_row = 2 * (g + window) + 3
    report = CheckReport()
    cpoly = basis.curve_poly
    for k, mk in enumerate(basis.m_polys):
        row = 2 * (g + k) + 1
        name = h_symbol(row, 1 - 2 * g)
        hred = MultiPoly.var(name) if name in rs.generators else rs.solved[name]
        rate = x_derivative(hred, g, rs, 0)
        residual = poisson_bracket(cpoly, mk, g, rs, max_row) + rate * cpoly
        residual = curve_reduce(residual, g)
        report.checked += 1
        if not residual.is_zero:
            report.add_failure("poisson-ideal-curve", (k,), residual)
    for l in range(len(basis.m_polys)):
        for k in range(l, len(basis.m_polys)):
            residual = curve_reduce(
                poisson_bracket(basis.m_polys[l], basis.m_polys[k], g, rs, max_row), g)
            report.checked += 1
            if not residual.is_zero:
                report.add_failure("poisson-ideal-linear", (l, k), residual)
    return report


def poisson_cocycle(alpha: dict, j: int, k: int, g: int,
                    rs: RelationSet | None = None) -> MultiPoly:
    """Bracket realization of the symmetric tangent pairing on basis labels.

    alpha maps basis indices to constant coefficients; the result is the
    bracket of sum alpha_i p_i with the product defect of (p_j, p_k),
    restricted to the variety (curve-reduced, coefficients in generator
    form, derivatives through base jets).
    """
    from .strata import StructureConstantTable  # local to avoid import noise

    need = max([j, k] + [i for i in alpha] + [2 * g + 1])
    if rs is None:
        rs = _rows_for(g, 2 * need + 1)
    spec = StratumSpec(g, window=max(2 * need + 1, 2 * g + 1))
    table = StructureConstantTable(spec, rs)

    def as_poly(idx: int) -> MultiPoly:
        if idx % 2 == 0:
            return MultiPoly.monomial(1, [(LAM, idx // 2)]) if idx else MultiPoly.const(1)
        return MultiPoly.var(p_symbol(idx))

    defect = as_poly(j) * as_poly(k)
    for l, c in table.row(j, k).items():
        defect = defect - c * as_poly(l)
    a_poly = MultiPoly.zero()
    for i, coeff in alpha.items():
        a_poly = a_poly + as_poly(i) * Fraction(coeff)
    max_row = max((i for i in list(alpha) + [j, k, 2 * g + 1] if i % 2 == 1),
                  default=2 * g + 1)
    bracket = poisson_bracket(a_poly, defect, g, rs, max(max_row, 2 * need + 1))
    return curve_reduce(bracket, g)
