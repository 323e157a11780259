"""Hydrodynamic systems carried by the relation sets.

The closed one-forms on the coefficient variety turn each solved relation
row into a commuting flow: the time derivative of every generator along
the k-th flow equals the base-coordinate derivative of the corresponding
solved row entry.  This module converts that statement into the concrete
systems: the scalar hierarchy of the big cell, the coupled dispersionless
KdV systems in curve-coefficient form, conservation-law and
Hamilton-Jacobi views, genus-one moduli and discriminant flows, Riemann
invariants, and the two-field shallow-water reduction.

Derivative symbols follow ``d<field>/d<space>`` (first) and
``d2<field>/d<space>2`` (second, used only by the commutativity check).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .exactalg import MultiPoly, RelationSet, h_symbol, u_symbol, x_symbol
from .geometry import generator_symbols, u_polynomials
from .strata import (
    CheckReport,
    StratumSpec,
    derive_rows,
    flow_jacobian,
    half_binomial,
)


class ComplexRootsError(ValueError):
    """The curve cubic has complex roots: no hyperbolic Riemann form."""


def deriv_symbol(field_name: str, space: str) -> str:
    return f"d{field_name}/d{space}"


def second_deriv_symbol(field_name: str, space: str) -> str:
    return f"d2{field_name}/d{space}2"


@dataclass
class HydroSystem:
    """First-order quasilinear system u_t = V(u) u_x in expanded form.

    ``rhs[i]`` is a polynomial in the field symbols and their first
    space-derivative symbols, linear in the latter.  ``fluxes`` is set for
    systems that come straight from a conservation-law structure.
    """

    name: str
    time_var: str
    space_var: str
    fields: list
    rhs: list
    fluxes: list | None = None

    def __post_init__(self):
        dsyms = [deriv_symbol(f, self.space_var) for f in self.fields]
        for poly in self.rhs:
            for mono, _ in poly.terms.items():
                if sum(e for v, e in mono if v in dsyms) > 1:
                    raise ValueError("right-hand side is not of hydrodynamic type")

    def deriv_symbols(self) -> list:
        return [deriv_symbol(f, self.space_var) for f in self.fields]

    def velocity_matrix(self) -> list:
        """V[i][j] = coefficient of the j-th derivative symbol in rhs[i]."""
        dsyms = self.deriv_symbols()
        return [[poly.diff(ds) for ds in dsyms] for poly in self.rhs]

    def to_json(self) -> dict:
        data = {
            "name": self.name,
            "time": self.time_var,
            "space": self.space_var,
            "fields": list(self.fields),
            "rhs": [p.canonical_str() for p in self.rhs],
        }
        if self.fluxes is not None:
            data["fluxes"] = [p.canonical_str() for p in self.fluxes]
        return data


@dataclass
class HamiltonJacobiForm:
    """Potential view: d(potential_k)/dt = F_k(d(potentials)/dx)."""

    name: str
    time_var: str
    space_var: str
    potentials: list
    rhs: list  # polynomials in the jet symbols d<potential>/d<space>


@dataclass
class DiagonalSystem:
    """Strictly diagonal system d(gamma_i)/dt = speed_i(gamma) d(gamma_i)/dx."""

    invariants: list
    speeds: list

    def speed_values(self, values: list) -> list:
        env = {name: v for name, v in zip(self.invariants, values)}
        return [s.eval_num(env) for s in self.speeds]


# ---------------------------------------------------------------------------
# scalar hierarchy of the big cell


def bh_coefficient(k: int) -> Fraction:
    """Coefficient of u^{k-1} u_x in the k-th scalar flow: 2^k k(2k-1) C(1/2,k)."""
    return Fraction(2 ** k * k * (2 * k - 1)) * half_binomial(k)


def derive_bh_hierarchy(kmax: int, rs: RelationSet | None = None) -> list:
    """The scalar hierarchy du/dx_{2k-1} = c_k u^{k-1} du/dx_1, k = 1..kmax.

    Derived from the relation set: the closed-form solved entry for
    H[2k-1][1] is c u^k, and cross-derivative symmetry of the one-form
    turns it into the flow with coefficient k c.
    """
    if kmax < 2:
        raise ValueError("kmax must be at least 2")
    if rs is None:
        rs = derive_rows(0, max_row=2 * kmax - 1, pair_sum=2 * kmax + 4)
    u = MultiPoly.var("u")
    du = MultiPoly.var(deriv_symbol("u", x_symbol(1)))
    out = []
    for k in range(1, kmax + 1):
        name = h_symbol(2 * k - 1, 1)
        solved = MultiPoly.var(name) if name in rs.generators else rs.solved[name]
        # solved = c * H[1][1]^k; flow coefficient is d(solved)/dH = k c u^{k-1}
        flow_poly = solved.diff(h_symbol(1, 1)).subs({h_symbol(1, 1): u})
        out.append(HydroSystem(
            name=f"bh-x{2 * k - 1}",
            time_var=x_symbol(2 * k - 1),
            space_var=x_symbol(1),
            fields=["u"],
            rhs=[flow_poly * du],
        ))
    return out


# ---------------------------------------------------------------------------
# coupled systems in curve-coefficient form


def _default_rows(g: int, flow_index: int) -> RelationSet:
    return derive_rows(g, max_row=2 * (g + flow_index) + 1,
                       pair_sum=2 * (2 * (g + flow_index) + 1) + 2)


def u_to_generators(g: int) -> dict:
    """Triangular inverse of the curve-coefficient map, as polynomials in u."""
    gens = generator_symbols(g)
    upolys = u_polynomials(g)
    mapping: dict[str, MultiPoly] = {}
    for i, gen in enumerate(gens):
        m = 2 * g - i  # u_m carries gen_i linearly with coefficient 2
        expr = upolys[m]
        rest = expr - 2 * MultiPoly.var(gen)
        solved = (MultiPoly.var(u_symbol(m)) - rest.subs(mapping)) * Fraction(1, 2)
        mapping[gen] = solved
    return mapping


def _invert_u_jacobian(g: int) -> list:
    """Inverse of d(u_m)/d(gen_i), exploiting the anti-triangular shape."""
    gens = generator_symbols(g)
    upolys = u_polynomials(g)
    n = 2 * g + 1
    J = [[upolys[m].diff(gens[i]) for i in range(n)] for m in range(n)]
    inv = [[MultiPoly.zero() for _ in range(n)] for _ in range(n)]
    for col in range(n):
        # solve J x = e_col; row m determines x_{2g-m}
        x = [MultiPoly.zero()] * n
        for m in range(n - 1, -1, -1):
            i = 2 * g - m
            acc = MultiPoly.const(1) if m == col else MultiPoly.zero()
            for iprev in range(i):
                acc = acc - J[m][iprev] * x[iprev]
            x[i] = acc * Fraction(1, 2)
        for i in range(n):
            inv[i][col] = x[i]
    return J, inv


def derive_dckdv(g: int, flow_index: int, rs: RelationSet | None = None) -> HydroSystem:
    """The coupled system for the curve coefficients along one flow.

    Velocity matrix V = J A J^{-1} where A is the generator-flow Jacobian
    and J the curve-coefficient Jacobian; the result is re-expressed as
    polynomials in the u fields.
    """
    if g < 1:
        raise ValueError("coupled systems start at genus one")
    if not 1 <= flow_index <= 2 * g:
        raise ValueError("flow_index must lie in 1..2g")
    if rs is None:
        rs = _default_rows(g, flow_index)
    spec = StratumSpec(g, window=max(2 * (g + flow_index) + 1, 2 * g + 1))
    A = flow_jacobian(spec, rs, flow_index)
    J, Jinv = _invert_u_jacobian(g)
    n = 2 * g + 1
    JA = [[sum((J[m][i] * A[i][j] for i in range(n)), MultiPoly.zero())
           for j in range(n)] for m in range(n)]
    V = [[sum((JA[m][i] * Jinv[i][jcol] for i in range(n)), MultiPoly.zero())
          for jcol in range(n)] for m in range(n)]
    to_u = u_to_generators(g)
    space = x_symbol(2 * g + 1)
    fields = [u_symbol(m) for m in range(n)]
    dsyms = [MultiPoly.var(deriv_symbol(f, space)) for f in fields]
    rhs = []
    for m in range(n):
        total = MultiPoly.zero()
        for jcol in range(n):
            total = total + V[m][jcol].subs(to_u) * dsyms[jcol]
        rhs.append(total)
    return HydroSystem(
        name=f"dckdv-g{g}-x{2 * (g + flow_index) + 1}",
        time_var=x_symbol(2 * (g + flow_index) + 1),
        space_var=space,
        fields=fields,
        rhs=rhs,
    )


def conservation_form(g: int, flow_index: int, rs: RelationSet | None = None) -> HydroSystem:
    """Same flow for the base jets v_k, with explicit fluxes.

    d v_k / dt = d/dx (solved row entry), the solved entry rewritten in the
    v symbols; the expanded right-hand side is hydrodynamic.
    """
    if rs is None:
        rs = _default_rows(g, flow_index)
    gens = rs.generators
    vnames = [f"v[{k}]" for k in range(1 - 2 * g, 2 * g + 2, 2)]
    rename = {gen: MultiPoly.var(v) for gen, v in zip(gens, vnames)}
    space = x_symbol(2 * g + 1)
    row = 2 * (g + flow_index) + 1
    fluxes, rhs = [], []
    for k in range(1 - 2 * g, 2 * g + 2, 2):
        name = h_symbol(row, k)
        solved = MultiPoly.var(name) if name in rs.generators else rs.solved[name]
        flux = solved.subs(rename)
        fluxes.append(flux)
        total = MultiPoly.zero()
        for v in vnames:
            total = total + flux.diff(v) * MultiPoly.var(deriv_symbol(v, space))
        rhs.append(total)
    return HydroSystem(
        name=f"cons-g{g}-x{row}",
        time_var=x_symbol(row),
        space_var=space,
        fields=vnames,
        rhs=rhs,
        fluxes=fluxes,
    )


def s_form(g: int, flow_index: int, rs: RelationSet | None = None) -> HamiltonJacobiForm:
    """Hamilton-Jacobi view: d S_k/dt as a polynomial in the d S_j/dx jets."""
    if rs is None:
        rs = _default_rows(g, flow_index)
    gens = rs.generators
    space = x_symbol(2 * g + 1)
    potentials = [f"S[{k}]" for k in range(1 - 2 * g, 2 * g + 2, 2)]
    rename = {gen: MultiPoly.var(deriv_symbol(s, space))
              for gen, s in zip(gens, potentials)}
    row = 2 * (g + flow_index) + 1
    rhs = []
    for k in range(1 - 2 * g, 2 * g + 2, 2):
        name = h_symbol(row, k)
        solved = MultiPoly.var(name) if name in rs.generators else rs.solved[name]
        rhs.append(solved.subs(rename))
    return HamiltonJacobiForm(
        name=f"hj-g{g}-x{row}",
        time_var=x_symbol(row),
        space_var=space,
        potentials=potentials,
        rhs=rhs,
    )


# ---------------------------------------------------------------------------
# commutativity


def _total_x(poly: MultiPoly, fields: list, space: str) -> MultiPoly:
    out = MultiPoly.zero()
    for f in fields:
        out = out + poly.diff(f) * MultiPoly.var(deriv_symbol(f, space))
        d1 = deriv_symbol(f, space)
        out = out + poly.diff(d1) * MultiPoly.var(second_deriv_symbol(f, space))
    return out


def _time_derivative(poly: MultiPoly, sys: HydroSystem) -> MultiPoly:
    out = MultiPoly.zero()
    for f, rhs in zip(sys.fields, sys.rhs):
        out = out + poly.diff(f) * rhs
        d1 = deriv_symbol(f, sys.space_var)
        out = out + poly.diff(d1) * _total_x(rhs, sys.fields, sys.space_var)
    return out


def commutativity_check(a: HydroSystem, b: HydroSystem) -> CheckReport:
    """Cross-derivative residuals of two flows, prolonged to second jets.

    Hydrodynamic right-hand sides need at most second space derivatives, so
    the residuals are polynomials in (fields, first jets, second jets) and
    commuting flows give the zero polynomial.
    """
    if a.space_var != b.space_var or a.fields != b.fields:
        raise ValueError("systems must share fields and the space variable")
    report = CheckReport()
    for i, f in enumerate(a.fields):
        residual = _time_derivative(a.rhs[i], b) - _time_derivative(b.rhs[i], a)
        report.checked += 1
        if not residual.is_zero:
            report.add_failure("commutativity", (a.name, b.name, f), residual)
    return report


# ---------------------------------------------------------------------------
# genus-one Riemann invariants


def riemann_form_g1() -> DiagonalSystem:
    """Diagonal form of the genus-one first flow on the curve roots.

    Each root is advected at half the root sum plus the root itself, which
    is the diagonalization of the curve-coefficient system under the
    elementary-symmetric back-map.
    """
    g1, g2, g3 = (MultiPoly.var(f"gamma[{i}]") for i in (1, 2, 3))
    total = g1 + g2 + g3
    speeds = [total * Fraction(1, 2) + gi for gi in (g1, g2, g3)]
    return DiagonalSystem(invariants=["gamma[1]", "gamma[2]", "gamma[3]"], speeds=speeds)


def cubic_roots_real(u2, u1, u0, tol: float = 1e-12):
    """All-real roots of lam^3 + u2 lam^2 + u1 lam + u0, descending.

    Vectorized trigonometric method; raises :class:`ComplexRootsError`
    when the discriminant is negative beyond ``tol`` anywhere.
    """
    u2 = np.asarray(u2, dtype=float)
    u1 = np.asarray(u1, dtype=float)
    u0 = np.asarray(u0, dtype=float)
    p = u1 - u2 ** 2 / 3.0
    q = 2.0 * u2 ** 3 / 27.0 - u2 * u1 / 3.0 + u0
    disc = -4.0 * p ** 3 - 27.0 * q ** 2
    scale = np.maximum(np.abs(p) ** 3, np.abs(q) ** 2) + 1.0
    if np.any(disc < -tol * scale):
        raise ComplexRootsError("cubic discriminant negative: complex roots")
    m = 2.0 * np.sqrt(np.maximum(-p / 3.0, 0.0))
    denom = np.where(m > 0, (p * m), 1.0)
    cosarg = np.clip(np.where(m > 0, 3.0 * q / denom, 0.0), -1.0, 1.0)
    theta = np.arccos(cosarg)
    roots = [m * np.cos(theta / 3.0 - 2.0 * np.pi * k / 3.0) - u2 / 3.0 for k in range(3)]
    stacked = np.sort(np.stack(roots), axis=0)[::-1]
    return stacked[0], stacked[1], stacked[2]


def vieta_from_roots(r1, r2, r3):
    """Back-map to curve coefficients: (u2, u1, u0) from the three roots."""
    u2 = -(r1 + r2 + r3)
    u1 = r1 * r2 + r1 * r3 + r2 * r3
    u0 = -(r1 * r2 * r3)
    return u2, u1, u0


# ---------------------------------------------------------------------------
# genus-one moduli flows


def _moduli_change_of_variables():
    """u -> (g2, g3, u2) substitutions, including the derivative symbols."""
    space = x_symbol(3)
    g2 = MultiPoly.var("g2")
    g3 = MultiPoly.var("g3")
    u2 = MultiPoly.var(u_symbol(2))
    dg2 = MultiPoly.var(deriv_symbol("g2", space))
    dg3 = MultiPoly.var(deriv_symbol("g3", space))
    du2 = MultiPoly.var(deriv_symbol(u_symbol(2), space))
    third = Fraction(1, 3)
    u1 = g2 + u2 * u2 * third
    u0 = g3 + g2 * u2 * third + u2 ** 3 * Fraction(1, 27)
    du1 = dg2 + u2 * du2 * Fraction(2, 3)
    du0 = dg3 + (dg2 * u2 + g2 * du2) * third + u2 * u2 * du2 * Fraction(1, 9)
    return {
        u_symbol(1): u1, u_symbol(0): u0,
        deriv_symbol(u_symbol(1), space): du1,
        deriv_symbol(u_symbol(0), space): du0,
    }


def moduli_flow_g1(flow: str, rs: RelationSet | None = None):
    """Genus-one moduli flows in the (g2, g3, u2) and (g2, g3, jet) variables.

    ``flow`` is "x5" or "x7".  Both returned systems are hydrodynamic; the
    jet variant evolves s = half the second curve coefficient, which is the
    base-coordinate derivative of the potential with lowest index.
    """
    flow_index = {"x5": 1, "x7": 2}[flow]
    base = derive_dckdv(1, flow_index, rs=rs)
    space = base.space_var
    subs = _moduli_change_of_variables()
    u2 = MultiPoly.var(u_symbol(2))
    u1 = MultiPoly.var(u_symbol(1))
    rhs_by_field = dict(zip(base.fields, base.rhs))
    r0, r1, r2 = (rhs_by_field[u_symbol(m)] for m in (0, 1, 2))
    third = Fraction(1, 3)
    dg2_dt = r1 - u2 * r2 * Fraction(2, 3)
    dg3_dt = r0 - u2 * r1 * third + (u2 * u2 * Fraction(2, 9) - u1 * third) * r2
    du2_dt = r2
    moduli_sys = HydroSystem(
        name=f"moduli-g1-{flow}",
        time_var=base.time_var,
        space_var=space,
        fields=["g2", "g3", u_symbol(2)],
        rhs=[dg2_dt.subs(subs), dg3_dt.subs(subs), du2_dt.subs(subs)],
    )
    # jet variant: u2 = 2 s
    s = MultiPoly.var("s[-1]")
    ds = MultiPoly.var(deriv_symbol("s[-1]", space))
    jet_subs = {u_symbol(2): 2 * s, deriv_symbol(u_symbol(2), space): 2 * ds}
    jet_sys = HydroSystem(
        name=f"moduli-jet-g1-{flow}",
        time_var=base.time_var,
        space_var=space,
        fields=["g2", "g3", "s[-1]"],
        rhs=[moduli_sys.rhs[0].subs(jet_subs), moduli_sys.rhs[1].subs(jet_subs),
             moduli_sys.rhs[2].subs(jet_subs) * Fraction(1, 2)],
    )
    return moduli_sys, jet_sys


def discriminant_flow_g1(rs: RelationSet | None = None) -> MultiPoly:
    """d/dx5 of the canonical discriminant along the first flow.

    Chain rule through the moduli system, expressed in (g2, g3, u2) and
    their space derivatives.
    """
    moduli_sys, _ = moduli_flow_g1("x5", rs=rs)
    g2 = MultiPoly.var("g2")
    g3 = MultiPoly.var("g3")
    dg2_dt, dg3_dt = moduli_sys.rhs[0], moduli_sys.rhs[1]
    # Delta = -16 (4 g2^3 + 27 g3^2)
    return (g2 * g2 * dg2_dt * 12 + g3 * dg3_dt * 54) * -16


def discriminant_flow_benney(rs: RelationSet | None = None) -> MultiPoly:
    """The same flow specialized to curves with a fixed point at the origin.

    With the lowest coefficient pinned to zero the discriminant becomes
    16 u1^2 (u2^2 - 4 u1); its flow is expressed in (u2, g2) with u1
    eliminated through u1 = g2 + u2^2/3.
    """
    base = derive_dckdv(1, 1, rs=rs)
    space = base.space_var
    rhs_by_field = dict(zip(base.fields, base.rhs))
    u2 = MultiPoly.var(u_symbol(2))
    u1 = MultiPoly.var(u_symbol(1))
    # constrained two-field system: u0 = 0
    kill = {u_symbol(0): MultiPoly.zero(), deriv_symbol(u_symbol(0), space): MultiPoly.zero()}
    r2 = rhs_by_field[u_symbol(2)].subs(kill)
    r1 = rhs_by_field[u_symbol(1)].subs(kill)
    delta = (u1 * u1) * (u2 * u2 - 4 * u1) * 16
    flow = delta.diff(u_symbol(2)) * r2 + delta.diff(u_symbol(1)) * r1
    g2 = MultiPoly.var("g2")
    dg2 = MultiPoly.var(deriv_symbol("g2", space))
    du2 = MultiPoly.var(deriv_symbol(u_symbol(2), space))
    subs = {
        u_symbol(1): g2 + u2 * u2 * Fraction(1, 3),
        deriv_symbol(u_symbol(1), space): dg2 + u2 * du2 * Fraction(2, 3),
    }
    return flow.subs(subs)


# ---------------------------------------------------------------------------
# the two-field shallow-water reduction


@dataclass
class BenneyReduction:
    constrained: HydroSystem     # (u2, u1) flow with the lowest coefficient pinned
    benney: HydroSystem          # (u, v) form, time t = -x5
    riemann: DiagonalSystem      # r(+/-) = u +/- 2 sqrt(v), advected at u -/+ sqrt(v)
    u0_flow_on_constraint: MultiPoly  # must be zero: invariance of the constraint


def benney_reduction(rs: RelationSet | None = None) -> BenneyReduction:
    """Pin the lowest curve coefficient to zero and change variables.

    The constrained two-field system, under u = -u2, v = -u1 + u2^2/4 and
    t = -x5, is the 1-layer shallow-water system u_t + u u_x + v_x = 0,
    v_t + (uv)_x = 0, with Riemann invariants u +/- 2 sqrt(v).
    """
    base = derive_dckdv(1, 1, rs=rs)
    space = base.space_var
    rhs_by_field = dict(zip(base.fields, base.rhs))
    kill = {u_symbol(0): MultiPoly.zero(), deriv_symbol(u_symbol(0), space): MultiPoly.zero()}
    constrained = HydroSystem(
        name="dckdv-g1-x5-fixedpoint",
        time_var=base.time_var,
        space_var=space,
        fields=[u_symbol(2), u_symbol(1)],
        rhs=[rhs_by_field[u_symbol(2)].subs(kill), rhs_by_field[u_symbol(1)].subs(kill)],
    )
    u0_flow = rhs_by_field[u_symbol(0)].subs(kill)

    uf = MultiPoly.var("u")
    vf = MultiPoly.var("v")
    du = MultiPoly.var(deriv_symbol("u", "x"))
    dv = MultiPoly.var(deriv_symbol("v", "x"))
    benney = HydroSystem(
        name="benney",
        time_var="t",
        space_var="x",
        fields=["u", "v"],
        rhs=[-(uf * du) - dv, -(uf * dv) - vf * du],
    )
    rp = MultiPoly.var("r[+]")
    rm = MultiPoly.var("r[-]")
    quarter = Fraction(1, 4)
    riemann = DiagonalSystem(
        invariants=["r[+]", "r[-]"],
        speeds=[-(rp * 3 + rm) * quarter, -(rp + rm * 3) * quarter],
    )
    return BenneyReduction(constrained, benney, riemann, u0_flow)
