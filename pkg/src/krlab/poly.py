"""Exact bigraded polynomial arithmetic over the rationals.

Every ring in the library is a polynomial ring Q[a, marks, symmetric
generators] graded by a pair (a-degree, x-degree):

    deg a = (2, 0)       deg mark = (0, 2)       deg E_k = (0, 2k)

where E_k is the k-th elementary symmetric generator of a colored-edge
alphabet.  Polynomials are stored sparsely as exponent-vector -> Fraction
maps; coefficients are exact rationals throughout, never floats.
Canonical term order is graded lexicographic on (variable index,
exponent), which makes exact multivariate division deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

KIND_A = "a"
KIND_MARK = "mark"
KIND_SYM = "elementary-symmetric"

_KIND_DEGREES = {KIND_A: (2, 0), KIND_MARK: (0, 2)}


@dataclass(frozen=True)
class Variable:
    """One generator of a bigraded polynomial ring."""

    name: str
    kind: str
    bidegree: tuple[int, int]

    def __post_init__(self) -> None:
        if self.kind not in (KIND_A, KIND_MARK, KIND_SYM):
            raise ValueError(f"unknown variable kind {self.kind!r}")
        if self.kind in _KIND_DEGREES and self.bidegree != _KIND_DEGREES[self.kind]:
            raise ValueError(f"{self.kind} variables have bidegree {_KIND_DEGREES[self.kind]}")
        if self.kind == KIND_SYM and (self.bidegree[0] != 0 or self.bidegree[1] <= 0 or self.bidegree[1] % 2):
            raise ValueError("elementary-symmetric generators have bidegree (0, 2k)")


class VariableTable:
    """Ordered, immutable list of variables shared by a family of polynomials.

    Tables compare by value, so structurally equal tables built in different
    places are interchangeable.
    """

    __slots__ = ("variables", "_index", "_hash")

    def __init__(self, variables: Iterable[Variable]):
        self.variables: tuple[Variable, ...] = tuple(variables)
        self._index: dict[str, int] = {v.name: i for i, v in enumerate(self.variables)}
        if len(self._index) != len(self.variables):
            raise ValueError("duplicate variable names")
        self._hash = hash(self.variables)

    @staticmethod
    def build(spec: Sequence[tuple[str, str] | tuple[str, str, int]]) -> "VariableTable":
        """Build a table from (name, kind) or (name, 'elementary-symmetric', k) entries."""
        out = []
        for entry in spec:
            if entry[1] == KIND_SYM:
                name, kind, k = entry  # type: ignore[misc]
                out.append(Variable(name, kind, (0, 2 * k)))
            else:
                name, kind = entry[:2]
                out.append(Variable(name, kind, _KIND_DEGREES[kind]))
        return VariableTable(out)

    def index(self, name: str) -> int:
        return self._index[name]

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def __len__(self) -> int:
        return len(self.variables)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, VariableTable) and self.variables == other.variables

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return "VariableTable(" + ", ".join(v.name for v in self.variables) + ")"

    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    def bidegree(self, name: str) -> tuple[int, int]:
        return self.variables[self._index[name]].bidegree

    def without(self, names: Iterable[str]) -> "VariableTable":
        drop = set(names)
        return VariableTable(v for v in self.variables if v.name not in drop)

    def monomial_bidegree(self, exponents: tuple[int, ...]) -> tuple[int, int]:
        da = dx = 0
        for e, v in zip(exponents, self.variables):
            if e:
                da += e * v.bidegree[0]
                dx += e * v.bidegree[1]
        return (da, dx)


def _term_sort_key(exponents: tuple[int, ...]) -> tuple:
    # graded-lex: total degree first, then exponent vector
    return (sum(exponents), exponents)


class BigradedPoly:
    """Sparse polynomial with Fraction coefficients over a VariableTable."""

    __slots__ = ("table", "terms")

    def __init__(self, table: VariableTable, terms: Mapping[tuple[int, ...], Fraction]):
        self.table = table
        self.terms: dict[tuple[int, ...], Fraction] = {
            e: c for e, c in terms.items() if c
        }

    # -- constructors ------------------------------------------------------

    @staticmethod
    def zero(table: VariableTable) -> "BigradedPoly":
        return BigradedPoly(table, {})

    @staticmethod
    def constant(table: VariableTable, c: Fraction | int) -> "BigradedPoly":
        c = Fraction(c)
        if not c:
            return BigradedPoly.zero(table)
        return BigradedPoly(table, {(0,) * len(table): c})

    @staticmethod
    def one(table: VariableTable) -> "BigradedPoly":
        return BigradedPoly.constant(table, 1)

    @staticmethod
    def variable(table: VariableTable, name: str) -> "BigradedPoly":
        e = [0] * len(table)
        e[table.index(name)] = 1
        return BigradedPoly(table, {tuple(e): Fraction(1)})

    # -- queries -----------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(not any(e) for e in self.terms)

    def constant_value(self) -> Fraction:
        if self.is_zero():
            return Fraction(0)
        if not self.is_constant():
            raise ValueError("not a constant")
        return next(iter(self.terms.values()))

    def bidegree(self) -> tuple[int, int] | None:
        """Common bidegree of all terms, None for the zero polynomial.

        Raises if the polynomial is inhomogeneous; every quantity in the
        library is supposed to stay homogeneous.
        """
        deg: tuple[int, int] | None = None
        for e in self.terms:
            d = self.table.monomial_bidegree(e)
            if deg is None:
                deg = d
            elif d != deg:
                raise ValueError(f"inhomogeneous polynomial: degrees {deg} and {d}")
        return deg

    def is_homogeneous(self) -> bool:
        try:
            self.bidegree()
        except ValueError:
            return False
        return True

    def degree_in(self, name: str) -> int:
        i = self.table.index(name)
        return max((e[i] for e in self.terms), default=0)

    def coefficient_of(self, name: str, power: int) -> "BigradedPoly":
        """Coefficient of name**power, as a polynomial in the other variables."""
        i = self.table.index(name)
        out: dict[tuple[int, ...], Fraction] = {}
        for e, c in self.terms.items():
            if e[i] == power:
                e2 = list(e)
                e2[i] = 0
                out[tuple(e2)] = out.get(tuple(e2), Fraction(0)) + c
        return BigradedPoly(self.table, out)

    def sorted_terms(self) -> list[tuple[tuple[int, ...], Fraction]]:
        return sorted(self.terms.items(), key=lambda t: _term_sort_key(t[0]), reverse=True)

    # -- arithmetic --------------------------------------------------------

    def _check(self, other: "BigradedPoly") -> None:
        if self.table != other.table:
            raise ValueError("mismatched variable tables")

    def __add__(self, other: "BigradedPoly") -> "BigradedPoly":
        self._check(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            s = out.get(e, Fraction(0)) + c
            if s:
                out[e] = s
            else:
                out.pop(e, None)
        return BigradedPoly(self.table, out)

    def __neg__(self) -> "BigradedPoly":
        return BigradedPoly(self.table, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other: "BigradedPoly") -> "BigradedPoly":
        return self + (-other)

    def __mul__(self, other: "BigradedPoly | Fraction | int") -> "BigradedPoly":
        if isinstance(other, (Fraction, int)):
            other = Fraction(other)
            if not other:
                return BigradedPoly.zero(self.table)
            return BigradedPoly(self.table, {e: c * other for e, c in self.terms.items()})
        self._check(other)
        out: dict[tuple[int, ...], Fraction] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                s = out.get(e, Fraction(0)) + c1 * c2
                if s:
                    out[e] = s
                else:
                    out.pop(e, None)
        return BigradedPoly(self.table, out)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "BigradedPoly":
        if n < 0:
            raise ValueError("negative power")
        out = BigradedPoly.one(self.table)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, BigradedPoly)
            and self.table == other.table
            and self.terms == other.terms
        )

    def __hash__(self) -> int:
        return hash((self.table, frozenset(self.terms.items())))

    def __repr__(self) -> str:
        if self.is_zero():
            return "0"
        names = self.table.names()
        parts = []
        for e, c in self.sorted_terms():
            factors = [str(c)] if (c != 1 or not any(e)) else []
            for name, k in zip(names, e):
                if k == 1:
                    factors.append(name)
                elif k > 1:
                    factors.append(f"{name}^{k}")
            parts.append("*".join(factors))
        return " + ".join(parts)


def arith(p: BigradedPoly, q: BigradedPoly, op: str) -> BigradedPoly:
    """Dispatch form of +, *, - used by callers that take the op as data."""
    if op == "add":
        return p + q
    if op == "sub":
        return p - q
    if op == "mul":
        return p * q
    raise ValueError(f"unknown op {op!r}")


def divide_exact(p: BigradedPoly, d: BigradedPoly) -> BigradedPoly:
    """Exact quotient p/d in the polynomial ring.

    Greedy division by leading terms in graded-lex order; raises if at any
    step the leading term is not divisible, so a non-exact division is an
    error, never a silent truncation.
    """
    p._check(d)
    if d.is_zero():
        raise ZeroDivisionError("division by zero polynomial")
    quot: dict[tuple[int, ...], Fraction] = {}
    rem = p
    lead_e, lead_c = max(d.terms.items(), key=lambda t: _term_sort_key(t[0]))
    while not rem.is_zero():
        re, rc = max(rem.terms.items(), key=lambda t: _term_sort_key(t[0]))
        qe = tuple(a - b for a, b in zip(re, lead_e))
        if any(x < 0 for x in qe):
            raise ValueError("non-exact polynomial division")
        qc = rc / lead_c
        quot[qe] = quot.get(qe, Fraction(0)) + qc
        rem = rem - BigradedPoly(rem.table, {qe: qc}) * d
    return BigradedPoly(p.table, quot)


def substitute(
    p: BigradedPoly,
    assignment: Mapping[str, BigradedPoly],
    target: VariableTable | None = None,
) -> BigradedPoly:
    """Evaluate p under variable -> polynomial assignments.

    Unassigned variables must exist in the target table and map to
    themselves.  Assigned images must already live over the target table.
    """
    if target is None:
        target = next(iter(assignment.values())).table if assignment else p.table
    images: list[BigradedPoly] = []
    for v in p.table.variables:
        if v.name in assignment:
            img = assignment[v.name]
            if img.table != target:
                raise ValueError(f"image of {v.name} over wrong table")
            images.append(img)
        else:
            images.append(BigradedPoly.variable(target, v.name))
    out = BigradedPoly.zero(target)
    # cache powers per variable to keep repeated exponents cheap
    powers: list[dict[int, BigradedPoly]] = [dict() for _ in images]
    for e, c in p.terms.items():
        term = BigradedPoly.constant(target, c)
        for i, k in enumerate(e):
            if not k:
                continue
            cache = powers[i]
            if k not in cache:
                cache[k] = images[i] ** k
            term = term * cache[k]
        out = out + term
    return out


def differentiate(p: BigradedPoly, name: str) -> BigradedPoly:
    """Formal partial derivative with respect to one variable."""
    i = p.table.index(name)
    out: dict[tuple[int, ...], Fraction] = {}
    for e, c in p.terms.items():
        if e[i]:
            e2 = list(e)
            e2[i] -= 1
            key = tuple(e2)
            out[key] = out.get(key, Fraction(0)) + c * e[i]
    return BigradedPoly(p.table, out)


def elementary_symmetric(
    table: VariableTable, alphabet: Sequence[str], k: int
) -> BigradedPoly:
    """k-th elementary symmetric polynomial of raw mark variables.

    1 for k = 0 and 0 for k < 0 or k > len(alphabet), matching the usual
    boundary conventions.  Alphabets stay small (size <= 3).
    """
    if k < 0 or k > len(alphabet):
        return BigradedPoly.zero(table)
    if k == 0:
        return BigradedPoly.one(table)
    if len(alphabet) > 3:
        raise ValueError("alphabets larger than 3 are out of scope")
    out = BigradedPoly.zero(table)
    n = len(alphabet)

    def rec(start: int, chosen: list[str]) -> None:
        nonlocal out
        if len(chosen) == k:
            term = BigradedPoly.one(table)
            for name in chosen:
                term = term * BigradedPoly.variable(table, name)
            out = out + term
            return
        for i in range(start, n):
            rec(i + 1, chosen + [alphabet[i]])

    rec(0, [])
    return out


def _sym_values(generators: Sequence[BigradedPoly], k: int) -> BigradedPoly:
    """e_k as a polynomial, 1 at k=0, 0 outside [0, m]."""
    table = generators[0].table
    if k == 0:
        return BigradedPoly.one(table)
    if k < 0 or k > len(generators):
        return BigradedPoly.zero(table)
    return generators[k - 1]


def power_sum_in_elementary(generators: Sequence[BigradedPoly], k: int) -> BigradedPoly:
    """p_{m,k} written in the given elementary symmetric generators.

    generators[j-1] plays the role of E_j, m = len(generators) <= 3.
    Computed by Newton's identities; p_{m,0} = m.
    """
    m = len(generators)
    if not (1 <= m <= 3):
        raise ValueError("alphabet size must be 1..3")
    table = generators[0].table
    p: list[BigradedPoly] = [BigradedPoly.constant(table, m)]
    for kk in range(1, k + 1):
        acc = BigradedPoly.zero(table)
        for i in range(1, min(kk, m) + 1):
            term = _sym_values(generators, i) * p[kk - i]
            acc = acc + (term if i % 2 == 1 else -term)
        if kk <= m:
            # the i = kk summand above used p_0 = m, so the classical
            # (-1)^{k-1} k e_k term needs the correction coefficient (k - m)
            tail = _sym_values(generators, kk) * Fraction(kk - m)
            acc = acc + (tail if kk % 2 == 1 else -tail)
        p.append(acc)
    return p[k]


def complete_symmetric_in_elementary(generators: Sequence[BigradedPoly], k: int) -> BigradedPoly:
    """h_{m,k} written in the given elementary symmetric generators.

    Uses sum_{i=0..k} (-1)^i e_i h_{k-i} = 0 for k >= 1.
    """
    m = len(generators)
    if not (1 <= m <= 3):
        raise ValueError("alphabet size must be 1..3")
    table = generators[0].table
    h: list[BigradedPoly] = [BigradedPoly.one(table)]
    for kk in range(1, k + 1):
        acc = BigradedPoly.zero(table)
        for i in range(1, min(kk, m) + 1):
            term = _sym_values(generators, i) * h[kk - i]
            acc = acc + (term if i % 2 == 1 else -term)
        h.append(acc)
    return h[k]
