"""Canonical basis series of the even graded strata and their relation algebra.

For genus ``g`` the basis of the invariant subspace consists of all even
monomials ``z^{2m}`` together with odd-order series

    p_j = z^j + sum_{m >= -g} H[j][2m+1] * z^{-(2m+1)},   odd j >= 2g+1.

Closure of the span under multiplication forces polynomial relations among
the H coefficients.  Rather than transcribing those relations, this module
*derives* them: every product of basis elements is re-expanded in the basis
by eliminating leading terms, and whatever cannot be absorbed must vanish.
Each leftover coefficient is a relation, and processed in the right order
the relations form a triangular system solved for everything in terms of
the 2g+1 coefficients of p_{2g+1}.  The re-expansion coefficients are the
structure constants of the quotient algebra, and their associativity
residuals reduce to zero exactly — which is what the verification sweep
checks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial

from .exactalg import (
    LAM,
    LaurentSeries,
    MultiPoly,
    RelationSet,
    h_symbol,
    hvar,
)


class InconsistentTruncationError(ValueError):
    """The truncation window is too shallow to close the requested relations."""


class WindowExceededError(ValueError):
    """A re-expansion needs an odd basis element beyond the window."""


@dataclass(frozen=True)
class StratumSpec:
    """Genus, maximal odd basis index, and series truncation depth."""

    genus: int
    window: int | None = None
    depth: int | None = None

    def __post_init__(self):
        if self.genus < 0:
            raise ValueError("genus must be non-negative")
        window = self.window if self.window is not None else 6 * self.genus + 7
        if window % 2 == 0:
            window -= 1
        if window < 2 * self.genus + 1:
            raise InconsistentTruncationError(
                f"window {window} is below the first odd index {2 * self.genus + 1}")
        depth = self.depth if self.depth is not None else -(2 * (window - 2 * self.genus) + 3)
        if depth > -(2 * (window - 2 * self.genus) + 1):
            raise InconsistentTruncationError(
                f"depth {depth} too shallow for window {window}: "
                f"need depth <= {-(2 * (window - 2 * self.genus) + 1)}")
        object.__setattr__(self, "window", window)
        object.__setattr__(self, "depth", depth)

    @property
    def first_odd(self) -> int:
        return 2 * self.genus + 1

    def odd_indices(self) -> list[int]:
        return list(range(self.first_odd, self.window + 1, 2))

    def basis_indices(self, limit: int | None = None) -> list[int]:
        """All basis indices (even and admissible odd) up to ``limit``."""
        top = self.window if limit is None else limit
        out = list(range(0, top + 1, 2))
        out += [j for j in self.odd_indices() if j <= top]
        return sorted(out)

    def generator_names(self) -> list[str]:
        j = self.first_odd
        return [h_symbol(j, k) for k in range(1 - 2 * self.genus, 2 * self.genus + 2, 2)]


def even_series(m: int) -> LaurentSeries:
    """The exact basis element z^{2m}."""
    if m < 0:
        raise ValueError("even basis index must be non-negative")
    return LaurentSeries.monomial_z(2 * m)


def _odd_series(j: int, g: int, depth: int) -> LaurentSeries:
    coeffs: dict[int, MultiPoly] = {j: MultiPoly.const(1)}
    m = -g
    while -(2 * m + 1) >= depth:
        coeffs[-(2 * m + 1)] = hvar(j, 2 * m + 1)
        m += 1
    return LaurentSeries(coeffs, depth, j, tail_exact=False)


def basis_series(spec: StratumSpec, depth: int | None = None) -> dict[int, LaurentSeries]:
    """Canonical basis elements indexed by order, truncated at ``spec.depth``."""
    d = spec.depth if depth is None else depth
    out: dict[int, LaurentSeries] = {}
    for m in range(0, (spec.window + 2) // 2 + 1):
        out[2 * m] = even_series(m)
    for j in spec.odd_indices():
        out[j] = _odd_series(j, spec.genus, d)
    return out


def _derivation_depth(spec: StratumSpec) -> int:
    # climbing from row 2g+1 to row `window` loses two exponents per step
    return spec.depth - (spec.window - spec.first_odd) - 2


class _Eliminator:
    """Shared machinery: expand products in the basis, harvesting relations."""

    def __init__(self, spec: StratumSpec, depth: int):
        self.spec = spec
        self.depth = depth
        self.series = basis_series(spec, depth=depth)
        self.generators = spec.generator_names()
        self.solved: dict[str, MultiPoly] = {}
        self.residuals: list[MultiPoly] = []
        self.skipped = 0
        self._power_cache: dict = {}

    def reduce(self, p: MultiPoly) -> MultiPoly:
        # solved entries are write-once, so the shared power cache stays valid
        return p.subs(self.solved, power_cache=self._power_cache)

    def _solve_relation(self, rel: MultiPoly, solve: bool) -> None:
        rel = self.reduce(rel)
        if rel.is_zero:
            return
        unknowns = sorted(rel.variables() - set(self.generators) - set(self.solved))
        if not solve:
            if unknowns:
                self.skipped += 1  # boundary coefficient, not fully derivable here
            else:
                self.residuals.append(rel)
            return
        if not unknowns:
            self.residuals.append(rel)
            return
        # triangular step: exactly one new symbol, entering linearly
        if len(unknowns) != 1:
            raise InconsistentTruncationError(
                f"relation couples several new symbols {unknowns}; window too small")
        var = unknowns[0]
        coeff = rel.diff(var)
        if coeff.variables():
            raise InconsistentTruncationError(f"{var} enters non-linearly")
        c = coeff.constant_value()
        rest = rel.subs({var: MultiPoly.zero()})
        self.solved[var] = self.reduce(rest * (Fraction(-1) / c))

    def expand(self, product: LaurentSeries, solve: bool, collect: bool = True,
               floor: int | None = None) -> dict[int, MultiPoly]:
        """Eliminate the product against the basis from the top down.

        Returns the re-expansion coefficients by basis order.  Whatever ends
        up at non-basis orders is a relation: solved into the triangular
        system when ``solve`` is set, appended to the residual list (which
        must stay empty for a consistent stratum) otherwise.  Coefficients
        below ``floor`` are left untouched (they would reference symbols the
        current truncation cannot determine).
        """
        spec = self.spec
        table: dict[int, MultiPoly] = {}
        work = product
        low = product.min_exp if floor is None else max(product.min_exp, floor)
        for n in range(product.max_exp, low - 1, -1):
            c = self.reduce(work.coefficient(n))
            if c.is_zero:
                continue
            if n >= 0 and n % 2 == 0:
                if collect:
                    table[n] = c
                work = work - LaurentSeries.monomial_z(n, c)
            elif spec.first_odd <= n <= spec.window and n % 2 == 1:
                if collect:
                    table[n] = c
                work = work - self.series[n].scale(c)
            elif n > spec.window:
                raise WindowExceededError(
                    f"expansion needs odd basis element of order {n} beyond window {spec.window}")
            else:
                self._solve_relation(c, solve)
        return table


def derive_relations(spec: StratumSpec) -> RelationSet:
    """Derive the triangular relation set of the genus-``g`` stratum.

    The product p_{2g+1}^2 pins down the deep coefficients of the first odd
    row; multiplying each odd row by z^2 then pins down the next row.  Every
    remaining product in the window is re-expanded as a consistency check
    and must leave no residue.
    """
    depth_int = _derivation_depth(spec)
    elim = _Eliminator(spec, depth_int)
    first = spec.first_odd

    # the squared first row determines its own deep coefficients
    elim.expand(elim.series[first] * elim.series[first], solve=True)
    # shifting each row by z^2 determines the next row, two exponents shy
    for j in spec.odd_indices()[:-1]:
        elim.expand(elim.series[j].shift(2), solve=True,
                    floor=depth_int + (j - first) + 2)

    # consistency sweep: every other odd product must leave no residue
    odd = spec.odd_indices()
    for a_pos, j in enumerate(odd):
        for k in odd[a_pos:]:
            if (j, k) != (first, first):
                elim.expand(elim.series[j] * elim.series[k], solve=False, collect=True)

    return RelationSet(elim.generators, elim.solved, elim.residuals)


def derive_rows(genus: int, max_row: int, pair_sum: int) -> RelationSet:
    """Triangular relation set pared down for structure-constant lookups.

    Solves the H rows up to ``max_row`` just deep enough that any product
    pair (a, b) with a + b <= pair_sum has all its expansion coefficients
    in generator form.  No consistency sweep: this is the fast path behind
    the associativity verification, which is itself the consistency check.
    """
    first = 2 * genus + 1
    if max_row < first:
        max_row = first
    if max_row % 2 == 0:
        max_row += 1
    depth_int = -(pair_sum - first) - 6
    spec = StratumSpec(genus, window=max_row)
    elim = _Eliminator(spec, depth_int)
    elim.expand(elim.series[first] * elim.series[first], solve=True)
    for j in spec.odd_indices()[:-1]:
        elim.expand(elim.series[j].shift(2), solve=True,
                    floor=depth_int + (j - first) + 2)
    return RelationSet(elim.generators, elim.solved, elim.residuals)


def associativity_suite(genus: int, max_index: int) -> CheckReport:
    """Associativity residuals over all basis labels up to ``max_index``.

    Builds the extended relation rows the contraction intermediaries need
    (first factors reach index 2*max_index) and sweeps the residuals.
    """
    rs_ext = derive_rows(genus, max_row=2 * max_index - 1, pair_sum=3 * max_index)
    spec = StratumSpec(genus, window=2 * max_index - 1)
    table = StructureConstantTable(spec, rs_ext)
    return verify_associativity(table, rs_ext, spec.basis_indices(max_index))


def general_g0_closed_forms(k: int) -> MultiPoly:
    """The closed-form big-cell relation for the k-th odd coefficient.

    Returns H[2k-1][1] - 2^k (2k-1) C(1/2, k) H[1][1]^k, which must reduce
    to zero under the genus-0 relation set.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    return hvar(2 * k - 1, 1) - half_binomial(k) * Fraction(2 ** k * (2 * k - 1)) * hvar(1, 1) ** k


def half_binomial(k: int) -> Fraction:
    """The generalized binomial coefficient C(1/2, k), exactly."""
    num = Fraction(1)
    for i in range(k):
        num *= Fraction(1, 2) - i
    return num / factorial(k)


@dataclass
class CheckReport:
    """Outcome of a verification sweep: which identities failed, if any."""

    checked: int = 0
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def add_failure(self, identity: str, indices, residual: MultiPoly):
        self.failures.append({
            "identity": identity,
            "indices": list(indices),
            "residual": residual.canonical_str(),
        })

    def to_json(self) -> dict:
        return {"checked": self.checked, "failures": self.failures, "ok": self.ok}


class StructureConstantTable:
    """Re-expansion coefficients C_{jk}^l, reduced to generator form.

    Entries for pairs inside the window come from the eliminator (and the
    eliminated remainder is checked to vanish); entries for larger indices,
    needed as intermediates by the associativity sweep, come from the
    closed product formulas, which only reference H rows up to the larger
    odd operand.
    """

    def __init__(self, spec: StratumSpec, rs: RelationSet):
        self.spec = spec
        self.rs = rs
        self.entries: dict[tuple[int, int], dict[int, MultiPoly]] = {}
        self.expansion_residuals: list = []

    def _h_reduced(self, j: int, k: int) -> MultiPoly:
        if k < 1 - 2 * self.spec.genus or k % 2 == 0:
            return MultiPoly.zero()
        name = h_symbol(j, k)
        if name in self.rs.solved:
            return self.rs.solved[name]
        if name in self.rs.generators:
            return MultiPoly.var(name)
        raise InconsistentTruncationError(
            f"{name} not derived; enlarge the window/depth of the relation set")

    def _coeff_map(self, j: int, lowest: int) -> dict[int, MultiPoly]:
        """Symbolic z-coefficients of the basis element p_j down to ``lowest``."""
        if j % 2 == 0:
            return {j: MultiPoly.const(1)}
        g = self.spec.genus
        out = {j: MultiPoly.const(1)}
        idx = 1 - 2 * g
        while -idx >= lowest:
            out[-idx] = self._h_reduced(j, idx)
            idx += 2
        return out

    def _row_formula(self, j: int, k: int) -> dict[int, MultiPoly]:
        """Expansion coefficients of p_j * p_k over the basis orders.

        Basis orders (even >= 0, odd >= 2g+1) sit above every tail of every
        basis element, so within that range the expansion coefficients are
        simply the raw product coefficients: convolve the two symbolic
        coefficient maps and keep the representable orders.
        """
        first = self.spec.first_odd
        ca = self._coeff_map(j, -k)
        cb = self._coeff_map(k, -j)
        out: dict[int, MultiPoly] = {}
        for na, pa in ca.items():
            for nb, pb in cb.items():
                n = na + nb
                if n < 0 or (n % 2 == 1 and n < first):
                    continue
                prod = pa * pb
                if prod.is_zero:
                    continue
                s = out.get(n)
                out[n] = prod if s is None else s + prod
                if out[n].is_zero:
                    del out[n]
        return out

    def row(self, j: int, k: int) -> dict[int, MultiPoly]:
        if j > k:
            j, k = k, j
        got = self.entries.get((j, k))
        if got is None:
            got = self._row_formula(j, k)
            self.entries[(j, k)] = got
        return got

    def entry(self, j: int, k: int, l: int) -> MultiPoly:
        return self.row(j, k).get(l, MultiPoly.zero())

    def to_json(self) -> dict:
        return {
            f"{j},{k}": {str(l): c.canonical_str() for l, c in sorted(row.items())}
            for (j, k), row in sorted(self.entries.items())
        }


def structure_constants(spec: StratumSpec, rs: RelationSet,
                        pairs: list[tuple[int, int]] | None = None) -> StructureConstantTable:
    """Build the structure-constant table by basis elimination.

    Every requested product is eliminated against the basis; the remainder
    is reduced modulo ``rs`` and recorded if nonzero (it never should be).
    Pairs whose expansion would need an odd order beyond the window raise
    :class:`WindowExceededError` when requested explicitly and are skipped
    in the default sweep.
    """
    table = StructureConstantTable(spec, rs)
    elim = _Eliminator(spec, spec.depth)
    elim.solved = dict(rs.solved)

    if pairs is None:
        todo = []
        indices = spec.basis_indices()
        for a_pos, j in enumerate(indices):
            for k in indices[a_pos:]:
                if j % 2 != k % 2 and j + k > spec.window:
                    continue  # odd expansion order out of window
                todo.append((j, k))
    else:
        todo = [(min(j, k), max(j, k)) for (j, k) in pairs]

    for j, k in todo:
        if j % 2 != k % 2 and j + k > spec.window:
            raise WindowExceededError(
                f"pair ({j},{k}) needs odd order {j + k} beyond window {spec.window}")
        before = len(elim.residuals)
        product = elim.series[j] * elim.series[k]
        row = elim.expand(product, solve=False, collect=True)
        table.entries[(j, k)] = {l: rs.reduce(c) for l, c in row.items()}
        for r in elim.residuals[before:]:
            table.expansion_residuals.append(((j, k), r.canonical_str()))
    return table


def verify_associativity(table: StructureConstantTable, rs: RelationSet,
                         indices: list[int]) -> CheckReport:
    """Check the associativity residuals of the structure constants.

    For basis labels j, k, m from ``indices`` the contraction
    sum_l (C_{jk}^l C_{lm}^r - C_{mk}^l C_{lj}^r) must vanish identically
    for every r once all entries are in generator form.  The sweep uses the
    antisymmetry in (j, m) to halve the work.
    """
    report = CheckReport()
    idx = sorted(set(indices))
    packer = _Packer(rs.generators)

    packed_rows: dict[tuple[int, int], dict[int, dict[int, Fraction]]] = {}

    def prow(a: int, b: int) -> dict[int, dict[int, Fraction]]:
        key = (min(a, b), max(a, b))
        got = packed_rows.get(key)
        if got is None:
            got = {l: packer.pack(c) for l, c in table.row(*key).items()}
            packed_rows[key] = got
        return got

    for a_pos, j in enumerate(idx):
        for m in idx[a_pos + 1:]:
            for k in idx:
                acc: dict[int, dict[int, Fraction]] = {}
                for l, cjk in prow(j, k).items():
                    for r, clm in prow(l, m).items():
                        _packed_mul_acc(acc.setdefault(r, {}), cjk, clm, 1)
                for l, cmk in prow(m, k).items():
                    for r, clj in prow(l, j).items():
                        _packed_mul_acc(acc.setdefault(r, {}), cmk, clj, -1)
                report.checked += 1
                for r, poly in sorted(acc.items()):
                    cleaned = {mo: c for mo, c in poly.items() if c != 0}
                    if cleaned:
                        report.add_failure("associativity", (j, k, m, r),
                                           packer.unpack(cleaned))
    return report


class _Packer:
    """Dense packing of generator-only monomials into single integers.

    Exponents are limited to 2^16 per generator, far beyond anything the
    windows in scope can produce; multiplication of monomials becomes
    integer addition, which keeps the associativity sweep fast.
    """

    SHIFT = 16

    def __init__(self, generators: list[str]):
        self.generators = list(generators)
        self.index = {gname: i for i, gname in enumerate(self.generators)}

    def pack(self, poly: MultiPoly) -> dict[int, Fraction]:
        out: dict[int, Fraction] = {}
        for mono, coeff in poly.terms.items():
            key = 0
            for name, exp in mono:
                key += exp << (self.SHIFT * self.index[name])
            out[key] = coeff
        return out

    def unpack(self, packed: dict[int, Fraction]) -> MultiPoly:
        terms = {}
        mask = (1 << self.SHIFT) - 1
        for key, coeff in packed.items():
            pairs = []
            for i, name in enumerate(self.generators):
                exp = (key >> (self.SHIFT * i)) & mask
                if exp:
                    pairs.append((name, exp))
            terms[tuple(sorted(pairs))] = coeff
        return MultiPoly(terms)


def _packed_mul_acc(acc: dict[int, Fraction], a: dict[int, Fraction],
                    b: dict[int, Fraction], sign: int) -> None:
    if len(a) > len(b):
        a, b = b, a
    for ka, ca in a.items():
        if sign < 0:
            ca = -ca
        for kb, cb in b.items():
            key = ka + kb
            prev = acc.get(key)
            acc[key] = ca * cb if prev is None else prev + ca * cb


def symmetry_check_g0(rs: RelationSet, window: int) -> CheckReport:
    """Check k*H[j][k] = j*H[k][j] for all odd j, k up to ``window``."""
    report = CheckReport()
    for j in range(1, window + 1, 2):
        for k in range(j, window + 1, 2):
            expr = Fraction(k) * hvar(j, k) - Fraction(j) * hvar(k, j)
            residual = rs.reduce(expr)
            report.checked += 1
            if not residual.is_zero:
                report.add_failure("index-symmetry", (j, k), residual)
    return report


def flow_jacobian(spec: StratumSpec, rs: RelationSet, flow_index: int) -> list[list[MultiPoly]]:
    """Jacobian of the solved row 2(g+flow_index)+1 w.r.t. the generators.

    Entry [i][j] is d(solved H[row][idx_i])/d(gen_j); this matrix is the
    velocity matrix of the generator fields along the flow direction.
    """
    g = spec.genus
    row = 2 * (g + flow_index) + 1
    gens = rs.generators
    out = []
    for k in range(1 - 2 * g, 2 * g + 2, 2):
        name = h_symbol(row, k)
        if name in rs.solved:
            poly = rs.solved[name]
        elif name in rs.generators:
            poly = MultiPoly.var(name)
        else:
            raise InconsistentTruncationError(f"{name} not derived; enlarge the window")
        out.append([poly.diff(gname) for gname in gens])
    return out
