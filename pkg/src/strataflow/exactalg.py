"""Exact arithmetic kernel.

Sparse multivariate polynomials over exact rationals, truncated formal
Laurent series with polynomial coefficients, and normal-form reduction
against triangular relation sets.  Everything in here is pure and exact:
coefficients are `fractions.Fraction`, monomials are sorted tuples of
``(variable_name, exponent)`` pairs, and no operation ever rounds.

A polynomial is stored as ``{monomial: Fraction}`` with no zero
coefficients.  The canonical term order (used only for serialization) is
graded lexicographic: higher total degree first, ties broken by comparing
the name/exponent tuples, which is stable across sessions because variable
names order themselves.

A Laurent series knows its truncation window explicitly.  ``min_exp`` is
the knowledge floor: coefficients below it have been discarded and are
unknown, unless ``tail_exact`` is set, in which case the series is a
genuine Laurent polynomial with nothing below the floor.  Arithmetic
narrows windows so that every stored coefficient is complete; an operation
whose reliable window comes out empty raises :class:`EmptyWindowError`.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

Monomial = tuple  # tuple[tuple[str, int], ...], sorted by name, exponents > 0

_ONE: Monomial = ()


class UnknownVariableError(KeyError):
    """A polynomial mentions a variable the reducer knows nothing about."""


class EmptyWindowError(ValueError):
    """A series operation produced an empty reliable window."""


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    raise TypeError(f"expected an exact scalar, got {type(value).__name__}")


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    merged = dict(a)
    for name, exp in b:
        merged[name] = merged.get(name, 0) + exp
    return tuple(sorted(merged.items()))


def _mono_degree(m: Monomial) -> int:
    return sum(e for _, e in m)


def _term_sort_key(m: Monomial):
    # graded lex, high degree first; name order is session-independent
    return (-_mono_degree(m), m)


class MultiPoly:
    """Sparse multivariate polynomial with Fraction coefficients."""

    __slots__ = ("terms",)

    def __init__(self, terms: dict | None = None):
        self.terms: dict = terms if terms is not None else {}

    # -- constructors -------------------------------------------------

    @classmethod
    def zero(cls) -> "MultiPoly":
        return cls({})

    @classmethod
    def const(cls, value) -> "MultiPoly":
        c = _as_fraction(value)
        return cls({} if c == 0 else {_ONE: c})

    @classmethod
    def var(cls, name: str) -> "MultiPoly":
        return cls({((name, 1),): Fraction(1)})

    @classmethod
    def monomial(cls, coeff, pairs: Iterable[tuple[str, int]]) -> "MultiPoly":
        c = _as_fraction(coeff)
        if c == 0:
            return cls.zero()
        mono = tuple(sorted((n, e) for n, e in pairs if e != 0))
        if any(e < 0 for _, e in mono):
            raise ValueError("negative exponent in monomial")
        return cls({mono: c})

    # -- basic queries -------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        return max((_mono_degree(m) for m in self.terms), default=0)

    def variables(self) -> set:
        out = set()
        for m in self.terms:
            for name, _ in m:
                out.add(name)
        return out

    def constant_value(self) -> Fraction:
        """The value of a constant polynomial (error otherwise)."""
        if not self.terms:
            return Fraction(0)
        if len(self.terms) == 1 and _ONE in self.terms:
            return self.terms[_ONE]
        raise ValueError("polynomial is not constant")

    def coefficient(self, pairs: Iterable[tuple[str, int]]) -> Fraction:
        mono = tuple(sorted((n, e) for n, e in pairs if e != 0))
        return self.terms.get(mono, Fraction(0))

    # -- arithmetic ----------------------------------------------------

    def __add__(self, other) -> "MultiPoly":
        if not isinstance(other, MultiPoly):
            other = MultiPoly.const(other)
        if not self.terms:
            return MultiPoly(dict(other.terms))
        if not other.terms:
            return MultiPoly(dict(self.terms))
        out = dict(self.terms)
        for m, c in other.terms.items():
            s = out.get(m)
            if s is None:
                out[m] = c
            else:
                s = s + c
                if s == 0:
                    del out[m]
                else:
                    out[m] = s
        return MultiPoly(out)

    __radd__ = __add__

    def __neg__(self) -> "MultiPoly":
        return MultiPoly({m: -c for m, c in self.terms.items()})

    def __sub__(self, other) -> "MultiPoly":
        if not isinstance(other, MultiPoly):
            other = MultiPoly.const(other)
        return self + (-other)

    def __rsub__(self, other) -> "MultiPoly":
        return (-self) + other

    def __mul__(self, other) -> "MultiPoly":
        if not isinstance(other, MultiPoly):
            c = _as_fraction(other)
            if c == 0:
                return MultiPoly.zero()
            return MultiPoly({m: v * c for m, v in self.terms.items()})
        if not self.terms or not other.terms:
            return MultiPoly.zero()
        if len(self.terms) > len(other.terms):
            self, other = other, self
        out: dict = {}
        for ma, ca in self.terms.items():
            for mb, cb in other.terms.items():
                m = _mono_mul(ma, mb)
                s = out.get(m)
                if s is None:
                    out[m] = ca * cb
                else:
                    s = s + ca * cb
                    if s == 0:
                        del out[m]
                    else:
                        out[m] = s
        return MultiPoly(out)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "MultiPoly":
        if not isinstance(n, int) or n < 0:
            raise ValueError("exponent must be a non-negative integer")
        result = MultiPoly.const(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base if n > 1 else base
            n >>= 1
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, MultiPoly):
            return self.terms == other.terms
        if isinstance(other, (int, Fraction)):
            return self == MultiPoly.const(other)
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    # -- calculus and substitution --------------------------------------

    def diff(self, name: str) -> "MultiPoly":
        out: dict = {}
        for m, c in self.terms.items():
            for i, (v, e) in enumerate(m):
                if v == name:
                    reduced = m[:i] + ((v, e - 1),) + m[i + 1:] if e > 1 else m[:i] + m[i + 1:]
                    nc = c * e
                    s = out.get(reduced)
                    out[reduced] = nc if s is None else s + nc
                    if out[reduced] == 0:
                        del out[reduced]
                    break
        return MultiPoly(out)

    def subs(self, mapping: Mapping[str, "MultiPoly | Fraction | int"],
             power_cache: dict | None = None) -> "MultiPoly":
        """Substitute polynomials (or exact scalars) for variables.

        ``power_cache`` may be supplied by callers that substitute the same
        immutable right-hand sides over and over (triangular reduction);
        it maps ``(name, exponent)`` to the expanded power.
        """
        if not mapping:
            return self
        present = set()
        for m in self.terms:
            for v, _ in m:
                if v in mapping:
                    present.add(v)
        if not present:
            return self
        cache: dict = {} if power_cache is None else power_cache

        def power(name: str, exp: int) -> MultiPoly:
            key = (name, exp)
            got = cache.get(key)
            if got is None:
                repl = mapping[name]
                if not isinstance(repl, MultiPoly):
                    repl = MultiPoly.const(repl)
                got = repl ** exp
                cache[key] = got
            return got

        total = MultiPoly.zero()
        for m, c in self.terms.items():
            keep = []
            factor = None
            for v, e in m:
                if v in present:
                    factor = power(v, e) if factor is None else factor * power(v, e)
                else:
                    keep.append((v, e))
            term = MultiPoly({tuple(keep): c})
            total = total + (term if factor is None else term * factor)
        return total

    def eval_exact(self, env: Mapping[str, "Fraction | int"]) -> Fraction:
        total = Fraction(0)
        for m, c in self.terms.items():
            value = c
            for v, e in m:
                if v not in env:
                    raise UnknownVariableError(v)
                value *= _as_fraction(env[v]) ** e
            total += value
        return total

    def eval_num(self, env: Mapping[str, object]):
        """Evaluate with floats or numpy arrays (inexact, for numerics)."""
        total = 0.0
        for m, c in self.terms.items():
            value = float(c)
            for v, e in m:
                if v not in env:
                    raise UnknownVariableError(v)
                value = value * env[v] ** e
            total = total + value
        return total

    # -- serialization ---------------------------------------------------

    def sorted_terms(self) -> list:
        return sorted(self.terms.items(), key=lambda it: _term_sort_key(it[0]))

    def canonical_str(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for m, c in self.sorted_terms():
            if m:
                mono = "*".join(f"{name}^{exp}" for name, exp in m)
                parts.append(f"{c} * {mono}")
            else:
                parts.append(str(c))
        return " + ".join(parts)

    @classmethod
    def from_string(cls, text: str) -> "MultiPoly":
        """Parse the canonical serialization back into a polynomial."""
        text = text.strip()
        if text == "0":
            return cls.zero()
        total = cls.zero()
        for part in text.split(" + "):
            if " * " in part:
                coeff_txt, mono_txt = part.split(" * ", 1)
                pairs = []
                for factor in mono_txt.split("*"):
                    name, exp = factor.rsplit("^", 1)
                    pairs.append((name, int(exp)))
                total = total + cls.monomial(Fraction(coeff_txt), pairs)
            else:
                total = total + cls.const(Fraction(part))
        return total

    def __repr__(self):
        return f"MultiPoly({self.canonical_str()})"


def poly_arith(a: MultiPoly, b: MultiPoly, op: str) -> MultiPoly:
    """Dispatch exact polynomial arithmetic by operation name."""
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise ValueError(f"unknown operation {op!r}")


# -- symbol-name conventions ------------------------------------------------
#
# "H[j][k]"   coefficients of the canonical basis series (k may be negative)
# "D[j][k]"   tangent-space companions of the H symbols
# "u[k]"      curve coefficients
# "p[j]"      basis/fiber coordinates in polynomial (non-series) contexts
# "x[j]"      base coordinates
# "lam"       the even coordinate z^2


def h_symbol(j: int, k: int) -> str:
    return f"H[{j}][{k}]"


def d_symbol(j: int, k: int) -> str:
    return f"D[{j}][{k}]"


def u_symbol(k: int) -> str:
    return f"u[{k}]"


def p_symbol(j: int) -> str:
    return f"p[{j}]"


def x_symbol(j: int) -> str:
    return f"x[{j}]"


LAM = "lam"


def hvar(j: int, k: int) -> MultiPoly:
    return MultiPoly.var(h_symbol(j, k))


def dvar(j: int, k: int) -> MultiPoly:
    return MultiPoly.var(d_symbol(j, k))


class LaurentSeries:
    """Truncated formal Laurent series in z with MultiPoly coefficients."""

    __slots__ = ("coeffs", "min_exp", "max_exp", "tail_exact")

    def __init__(self, coeffs: dict[int, MultiPoly], min_exp: int, max_exp: int,
                 tail_exact: bool = False):
        if min_exp > max_exp:
            raise EmptyWindowError(f"window [{min_exp}, {max_exp}] is empty")
        clean = {}
        for n, poly in coeffs.items():
            if not (min_exp <= n <= max_exp):
                raise ValueError(f"exponent {n} outside window [{min_exp}, {max_exp}]")
            if not poly.is_zero:
                clean[n] = poly
        self.coeffs = clean
        self.min_exp = min_exp
        self.max_exp = max_exp
        self.tail_exact = tail_exact

    @classmethod
    def zero(cls, min_exp: int = 0, max_exp: int = 0, tail_exact: bool = True):
        return cls({}, min_exp, max_exp, tail_exact)

    @classmethod
    def monomial_z(cls, n: int, coeff: MultiPoly | int | Fraction = 1):
        poly = coeff if isinstance(coeff, MultiPoly) else MultiPoly.const(coeff)
        return cls({n: poly}, n, n, tail_exact=True)

    def known(self, n: int) -> bool:
        return n >= self.min_exp or self.tail_exact

    def coefficient(self, n: int) -> MultiPoly:
        if not self.known(n):
            raise EmptyWindowError(f"coefficient of z^{n} lies below the window floor {self.min_exp}")
        return self.coeffs.get(n, MultiPoly.zero())

    def exponents(self) -> list[int]:
        return sorted(self.coeffs)

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    def __add__(self, other: "LaurentSeries") -> "LaurentSeries":
        both_exact = self.tail_exact and other.tail_exact
        if both_exact:
            min_exp = min(self.min_exp, other.min_exp)
        elif self.tail_exact:
            min_exp = other.min_exp
        elif other.tail_exact:
            min_exp = self.min_exp
        else:
            min_exp = max(self.min_exp, other.min_exp)
        max_exp = max(self.max_exp, other.max_exp)
        out: dict[int, MultiPoly] = {}
        for n, c in self.coeffs.items():
            if n >= min_exp:
                out[n] = c
        for n, c in other.coeffs.items():
            if n < min_exp:
                continue
            s = out.get(n)
            out[n] = c if s is None else s + c
        return LaurentSeries(out, min_exp, max_exp, both_exact)

    def __neg__(self) -> "LaurentSeries":
        return LaurentSeries({n: -c for n, c in self.coeffs.items()},
                             self.min_exp, self.max_exp, self.tail_exact)

    def __sub__(self, other: "LaurentSeries") -> "LaurentSeries":
        return self + (-other)

    def scale(self, poly: MultiPoly | int | Fraction) -> "LaurentSeries":
        if not isinstance(poly, MultiPoly):
            poly = MultiPoly.const(poly)
        if poly.is_zero:
            return LaurentSeries({}, self.min_exp, self.max_exp, self.tail_exact)
        return LaurentSeries({n: c * poly for n, c in self.coeffs.items()},
                             self.min_exp, self.max_exp, self.tail_exact)

    def shift(self, k: int) -> "LaurentSeries":
        """Multiply by z^k."""
        return LaurentSeries({n + k: c for n, c in self.coeffs.items()},
                             self.min_exp + k, self.max_exp + k, self.tail_exact)

    def __mul__(self, other: "LaurentSeries") -> "LaurentSeries":
        max_exp = self.max_exp + other.max_exp
        floors = []
        if not self.tail_exact:
            floors.append(self.min_exp + other.max_exp)
        if not other.tail_exact:
            floors.append(other.min_exp + self.max_exp)
        if floors:
            min_exp = max(floors + [self.min_exp + other.min_exp])
            tail_exact = False
        else:
            min_exp = self.min_exp + other.min_exp
            tail_exact = True
        if min_exp > max_exp:
            raise EmptyWindowError(
                f"product window [{min_exp}, {max_exp}] is empty; deepen the truncation")
        out: dict[int, MultiPoly] = {}
        for na, ca in self.coeffs.items():
            for nb, cb in other.coeffs.items():
                n = na + nb
                if n < min_exp:
                    continue
                prod = ca * cb
                s = out.get(n)
                out[n] = prod if s is None else s + prod
        return LaurentSeries(out, min_exp, max_exp, tail_exact)

    def truncate(self, new_min: int) -> "LaurentSeries":
        if new_min <= self.min_exp:
            return self
        return LaurentSeries({n: c for n, c in self.coeffs.items() if n >= new_min},
                             new_min, max(self.max_exp, new_min), False)

    def map_coeffs(self, fn: Callable[[MultiPoly], MultiPoly]) -> "LaurentSeries":
        return LaurentSeries({n: fn(c) for n, c in self.coeffs.items()},
                             self.min_exp, self.max_exp, self.tail_exact)

    def subs_z(self, value: Fraction, env: Mapping[str, Fraction]) -> Fraction:
        """Evaluate at an exact numeric z with an assignment for all variables."""
        total = Fraction(0)
        for n, c in self.coeffs.items():
            total += c.eval_exact(env) * (value ** n)
        return total

    def __eq__(self, other) -> bool:
        if not isinstance(other, LaurentSeries):
            return NotImplemented
        return (self.coeffs == other.coeffs and self.min_exp == other.min_exp
                and self.max_exp == other.max_exp and self.tail_exact == other.tail_exact)

    def __repr__(self):
        parts = [f"({c.canonical_str()})*z^{n}" for n, c in sorted(self.coeffs.items(), reverse=True)]
        body = " + ".join(parts) if parts else "0"
        return f"LaurentSeries({body}; window [{self.min_exp}, {self.max_exp}])"


class RelationSet:
    """A triangular system: generators, solved substitutions, leftovers.

    ``solved`` maps non-generator variables to polynomials containing only
    generator variables, so reduction is a single substitution pass.
    """

    def __init__(self, generators: Sequence[str], solved: Mapping[str, MultiPoly],
                 residual_relations: Sequence[MultiPoly] = ()):
        self.generators = list(generators)
        self.solved = dict(solved)
        self.residual_relations = list(residual_relations)
        self._power_cache: dict = {}
        gen_set = set(self.generators)
        for var, rhs in self.solved.items():
            if var in gen_set:
                raise ValueError(f"{var} is both generator and solved")
            extra = rhs.variables() - gen_set
            if extra:
                raise ValueError(f"solved form of {var} is not triangular: uses {sorted(extra)}")

    def reduce(self, p: MultiPoly, allow: Callable[[str], bool] | None = None) -> MultiPoly:
        """Normal form of ``p`` modulo the solved substitutions.

        Raises :class:`UnknownVariableError` for variables that are neither
        generators nor solved, unless ``allow`` accepts them (used for
        foreign symbols such as ``lam`` or jet variables).
        """
        gen_set = set(self.generators)
        for v in p.variables():
            if v in gen_set or v in self.solved:
                continue
            if allow is None or not allow(v):
                raise UnknownVariableError(v)
        return p.subs(self.solved, power_cache=self._power_cache)

    def reduce_series(self, s: LaurentSeries,
                      allow: Callable[[str], bool] | None = None) -> LaurentSeries:
        return s.map_coeffs(lambda c: self.reduce(c, allow=allow))

    def to_json(self) -> dict:
        return {
            "generators": list(self.generators),
            "solved": {v: rhs.canonical_str() for v, rhs in sorted(self.solved.items())},
            "residual_relations": [r.canonical_str() for r in self.residual_relations],
        }

    @classmethod
    def from_json(cls, data: dict) -> "RelationSet":
        return cls(
            data["generators"],
            {v: MultiPoly.from_string(s) for v, s in data["solved"].items()},
            [MultiPoly.from_string(s) for s in data.get("residual_relations", [])],
        )

    def __repr__(self):
        return (f"RelationSet({len(self.generators)} generators, "
                f"{len(self.solved)} solved, {len(self.residual_relations)} residuals)")
