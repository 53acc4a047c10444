"""Skein-recursion evaluation of the decategorified invariant.

The invariant of a braid closure lives in Z[[alpha,xi]][alpha^-1,xi^-1,tau]
modulo tau^2 - 1.  Since tau squares to one, a value is stored through its
two evaluations tau = +1 and tau = -1; each evaluation is an unreduced
fraction of Laurent polynomials in (alpha, xi) whose denominator is kept as
a multiset of fixed factors.  Equality is decided by cross-multiplication,
so the lack of reduction never changes an answer.

The recursion follows the computation-tree strategy: simplify by transverse
moves, split a negative crossing, or expose and split a square of a positive
generator found by conjugacy search.  Both branches of every split strictly
shrink (negative count, letter count), so the recursion terminates at
crossingless closures, whose value is the closed-form unlink evaluation.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction

from .braid import BraidWord, markov_search, simplify, word_text

MAX_BUDGET = 10**6


class SkeinBudgetError(RuntimeError):
    """A positive word exposed no square within the search budget."""

    def __init__(self, word: BraidWord, budget: int):
        super().__init__(
            f"irreducible positive word within budget: {word_text(word)!r} "
            f"on {word.strands} strands, budget {budget}"
        )
        self.word = word
        self.budget = budget


# ---------------------------------------------------------------------------
# Laurent polynomials in (alpha, xi)


class Laurent:
    """Laurent polynomial in (alpha, xi) with Fraction coefficients.

    Terms are keyed by integer exponent pairs (alpha power, xi power).
    """

    __slots__ = ("terms",)

    def __init__(self, terms: dict[tuple[int, int], Fraction] | None = None):
        self.terms: dict[tuple[int, int], Fraction] = {}
        if terms:
            for key, c in terms.items():
                c = Fraction(c)
                if c:
                    self.terms[key] = c

    @staticmethod
    def zero() -> "Laurent":
        return Laurent()

    @staticmethod
    def monomial(coeff, da: int = 0, dx: int = 0) -> "Laurent":
        return Laurent({(da, dx): Fraction(coeff)})

    @staticmethod
    def one() -> "Laurent":
        return Laurent.monomial(1)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        return isinstance(other, Laurent) and self.terms == other.terms

    def __add__(self, other: "Laurent") -> "Laurent":
        out = dict(self.terms)
        for key, c in other.terms.items():
            s = out.get(key, Fraction(0)) + c
            if s:
                out[key] = s
            else:
                out.pop(key, None)
        res = Laurent()
        res.terms = out
        return res

    def __neg__(self) -> "Laurent":
        res = Laurent()
        res.terms = {key: -c for key, c in self.terms.items()}
        return res

    def __sub__(self, other: "Laurent") -> "Laurent":
        return self + (-other)

    def __mul__(self, other: "Laurent") -> "Laurent":
        out: dict[tuple[int, int], Fraction] = {}
        for (a1, x1), c1 in self.terms.items():
            for (a2, x2), c2 in other.terms.items():
                key = (a1 + a2, x1 + x2)
                s = out.get(key, Fraction(0)) + c1 * c2
                if s:
                    out[key] = s
                else:
                    del out[key]
        res = Laurent()
        res.terms = out
        return res

    def __pow__(self, k: int) -> "Laurent":
        if k < 0:
            raise ValueError("negative power of a Laurent polynomial")
        out = Laurent.one()
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def scaled(self, coeff, da: int = 0, dx: int = 0) -> "Laurent":
        c0 = Fraction(coeff)
        res = Laurent()
        if c0:
            res.terms = {(a + da, x + dx): c * c0 for (a, x), c in self.terms.items()}
        return res

    def min_alpha(self) -> int | None:
        return min((a for a, _ in self.terms), default=None)

    def min_xi(self) -> int | None:
        return min((x for _, x in self.terms), default=None)

    def __repr__(self) -> str:
        return f"Laurent({self.pretty()})"

    def pretty(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for (a, x) in sorted(self.terms, key=lambda t: (t[1], t[0])):
            c = self.terms[(a, x)]
            factors = []
            if a:
                factors.append("a" + (f"^{a}" if a != 1 else ""))
            if x:
                factors.append("q" + (f"^{x}" if x != 1 else ""))
            body = "*".join(factors)
            if not body:
                parts.append(str(c))
            elif c == 1:
                parts.append(body)
            elif c == -1:
                parts.append("-" + body)
            else:
                parts.append(f"{c}*{body}")
        text = " + ".join(parts)
        return text.replace("+ -", "- ")


def _leading(p: Laurent) -> tuple[tuple[int, int], Fraction]:
    key = max(p.terms)
    return key, p.terms[key]


def divide_exact(num: Laurent, den: Laurent) -> Laurent | None:
    """num / den when the division is exact, else None.

    Greedy reduction in lexicographic term order; exponents may go negative,
    so non-divisibility shows up as a runaway loop rather than a stuck
    leading term.  The step bound turns that into a clean failure.
    """
    if den.is_zero:
        raise ZeroDivisionError("division by the zero polynomial")
    if num.is_zero:
        return Laurent.zero()
    quotient = Laurent.zero()
    rest = num
    (ga, gx), gc = _leading(den)
    limit = 16 + 4 * len(num.terms) * max(1, len(den.terms))
    for _ in range(limit):
        if rest.is_zero:
            return quotient
        (fa, fx), fc = _leading(rest)
        t = Laurent.monomial(fc / gc, fa - ga, fx - gx)
        quotient = quotient + t
        rest = rest - t * den
    return None


# ---------------------------------------------------------------------------
# Denominator atoms
#
# Every denominator produced by the recursion is a product of these four
# factors; each admits a power-series expansion with exponents bounded below.

ATOM_ALPHA = ("alpha",)  # 1 - alpha^2


def atom_xi1() -> tuple:
    return ("xi", 1)  # xi^-1 - xi


def atom_xin(n: int) -> tuple:
    return ("xi", n)  # xi^-n - xi^n


def atom_unit(n: int) -> tuple:
    return ("unit", n)  # tau*alpha*xi^(-n-1) + 1


def atom_poly(key: tuple, tau: int) -> Laurent:
    if key == ATOM_ALPHA:
        return Laurent({(0, 0): Fraction(1), (2, 0): Fraction(-1)})
    if key[0] == "xi":
        n = key[1]
        return Laurent({(0, -n): Fraction(1), (0, n): Fraction(-1)})
    if key[0] == "unit":
        n = key[1]
        return Laurent({(1, -n - 1): Fraction(tau), (0, 0): Fraction(1)})
    raise ValueError(f"unknown denominator atom {key!r}")


def _den_poly(den: Counter, tau: int) -> Laurent:
    out = Laurent.one()
    for key, mult in sorted(den.items()):
        out = out * atom_poly(key, tau) ** mult
    return out


# ---------------------------------------------------------------------------
# Rational functions at a fixed value of tau


@dataclass(frozen=True)
class RationalFunction:
    """num / prod(den atoms) evaluated at tau = +1 or tau = -1."""

    tau: int
    num: Laurent
    den: Counter

    def __post_init__(self):
        if self.tau not in (1, -1):
            raise ValueError("tau must be +1 or -1")
        if self.num.is_zero and self.den:
            object.__setattr__(self, "den", Counter())

    @staticmethod
    def from_laurent(tau: int, num: Laurent) -> "RationalFunction":
        return RationalFunction(tau, num, Counter())

    def stripped(self) -> "RationalFunction":
        """Cancel denominator atoms that divide the numerator exactly."""
        num, den = self.num, Counter(self.den)
        changed = True
        while changed and den:
            changed = False
            for key in list(den):
                q = divide_exact(num, atom_poly(key, self.tau))
                if q is not None:
                    num = q
                    den[key] -= 1
                    if not den[key]:
                        del den[key]
                    changed = True
        return RationalFunction(self.tau, num, den)

    def _match(self, other: "RationalFunction") -> tuple[Laurent, Laurent, Counter]:
        if self.tau != other.tau:
            raise ValueError("mixed tau evaluations")
        lcm = Counter(self.den)
        for key, mult in other.den.items():
            lcm[key] = max(lcm[key], mult)
        a, b = self.num, other.num
        for key, mult in lcm.items():
            up_self = mult - self.den[key]
            up_other = mult - other.den[key]
            if up_self:
                a = a * atom_poly(key, self.tau) ** up_self
            if up_other:
                b = b * atom_poly(key, self.tau) ** up_other
        return a, b, lcm

    def __add__(self, other: "RationalFunction") -> "RationalFunction":
        a, b, lcm = self._match(other)
        return RationalFunction(self.tau, a + b, lcm)

    def __sub__(self, other: "RationalFunction") -> "RationalFunction":
        a, b, lcm = self._match(other)
        return RationalFunction(self.tau, a - b, lcm)

    def __neg__(self) -> "RationalFunction":
        return RationalFunction(self.tau, -self.num, self.den)

    def __mul__(self, other: "RationalFunction") -> "RationalFunction":
        if self.tau != other.tau:
            raise ValueError("mixed tau evaluations")
        return RationalFunction(self.tau, self.num * other.num, self.den + other.den)

    def scaled(self, coeff, da: int = 0, dx: int = 0) -> "RationalFunction":
        return RationalFunction(self.tau, self.num.scaled(coeff, da, dx), self.den)

    def equals(self, other: "RationalFunction") -> bool:
        if self.tau != other.tau:
            return False
        if self.den == other.den:
            return self.num == other.num
        return self.num * _den_poly(other.den, other.tau) == other.num * _den_poly(
            self.den, self.tau
        )

    @property
    def is_zero(self) -> bool:
        return self.num.is_zero

    def series(self, alpha_max: int, xi_max: int) -> Laurent:
        """Exact expansion keeping alpha-exponents <= alpha_max and
        xi-exponents <= xi_max; exponents are bounded below throughout."""
        out = self.num
        # the unit atom lowers xi while raising alpha, so expand it first
        # with an alpha cap, leaving the pure-xi atoms a stable xi floor
        for key, mult in sorted(self.den.items()):
            if key[0] != "unit":
                continue
            n = key[1]
            for _ in range(mult):
                lo = out.min_alpha()
                if lo is None:
                    return Laurent.zero()
                steps = max(alpha_max - lo, 0)
                inv = Laurent(
                    {(i, -(n + 1) * i): Fraction(-self.tau) ** i for i in range(steps + 1)}
                )
                out = out * inv
        for key, mult in sorted(self.den.items()):
            if key == ATOM_ALPHA:
                for _ in range(mult):
                    lo = out.min_alpha()
                    if lo is None:
                        return Laurent.zero()
                    half = max((alpha_max - lo) // 2, 0)
                    inv = Laurent({(2 * i, 0): Fraction(1) for i in range(half + 1)})
                    out = out * inv
            elif key[0] == "xi":
                n = key[1]
                # xi^-n - xi^n = xi^-n (1 - xi^2n): invert as xi^n * sum xi^(2ni)
                for _ in range(mult):
                    lo = out.min_xi()
                    if lo is None:
                        return Laurent.zero()
                    reps = max((xi_max - lo - n) // (2 * n) + 1, 0)
                    inv = Laurent({(0, n + 2 * n * i): Fraction(1) for i in range(reps + 1)})
                    out = out * inv
        trimmed = Laurent(
            {
                (a, x): c
                for (a, x), c in out.terms.items()
                if a <= alpha_max and x <= xi_max
            }
        )
        return trimmed

    def pretty(self) -> str:
        num = self.num.pretty()
        if not self.den:
            return num
        factors = []
        for key, mult in sorted(self.den.items()):
            base = f"({atom_poly(key, self.tau).pretty()})"
            factors.append(base + (f"^{mult}" if mult > 1 else ""))
        return f"({num}) / ({' * '.join(factors)})"


# ---------------------------------------------------------------------------
# Values


@dataclass(frozen=True)
class SkeinValue:
    """The pair of evaluations tau = +1 / tau = -1 of one invariant value.

    The tau-polynomial form is recovered as (plus+minus)/2 + tau*(plus-minus)/2.
    """

    n: int
    plus: RationalFunction
    minus: RationalFunction

    def __post_init__(self):
        if self.plus.tau != 1 or self.minus.tau != -1:
            raise ValueError("components assigned to the wrong tau evaluation")

    @staticmethod
    def zero(n: int) -> "SkeinValue":
        return SkeinValue(
            n,
            RationalFunction.from_laurent(1, Laurent.zero()),
            RationalFunction.from_laurent(-1, Laurent.zero()),
        )

    @staticmethod
    def from_monomial(n: int, coeff, da: int = 0, dx: int = 0) -> "SkeinValue":
        mono = Laurent.monomial(coeff, da, dx)
        return SkeinValue(
            n,
            RationalFunction.from_laurent(1, mono),
            RationalFunction.from_laurent(-1, mono),
        )

    def __add__(self, other: "SkeinValue") -> "SkeinValue":
        return SkeinValue(self.n, self.plus + other.plus, self.minus + other.minus)

    def __sub__(self, other: "SkeinValue") -> "SkeinValue":
        return SkeinValue(self.n, self.plus - other.plus, self.minus - other.minus)

    def __neg__(self) -> "SkeinValue":
        return SkeinValue(self.n, -self.plus, -self.minus)

    def __mul__(self, other: "SkeinValue") -> "SkeinValue":
        return SkeinValue(self.n, self.plus * other.plus, self.minus * other.minus)

    def scaled(self, coeff, da: int = 0, dx: int = 0) -> "SkeinValue":
        return SkeinValue(
            self.n, self.plus.scaled(coeff, da, dx), self.minus.scaled(coeff, da, dx)
        )

    def times_tau(self) -> "SkeinValue":
        return SkeinValue(self.n, self.plus, -self.minus)

    def stripped(self) -> "SkeinValue":
        return SkeinValue(self.n, self.plus.stripped(), self.minus.stripped())

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, SkeinValue)
            and self.n == other.n
            and self.plus.equals(other.plus)
            and self.minus.equals(other.minus)
        )

    @property
    def is_zero(self) -> bool:
        return self.plus.is_zero and self.minus.is_zero

    def tau_series(self, alpha_max: int, xi_max: int) -> dict[tuple[int, int], tuple[Fraction, Fraction]]:
        """Term table {(alpha exp, xi exp): (constant part, tau part)}."""
        p = self.plus.series(alpha_max, xi_max)
        m = self.minus.series(alpha_max, xi_max)
        out = {}
        for key in sorted(set(p.terms) | set(m.terms)):
            cp = p.terms.get(key, Fraction(0))
            cm = m.terms.get(key, Fraction(0))
            out[key] = ((cp + cm) / 2, (cp - cm) / 2)
        return out

    def pretty(self) -> str:
        return f"tau=+1: {self.plus.pretty()}\ntau=-1: {self.minus.pretty()}"


def series_expand(v: SkeinValue, alpha_max: int, xi_max: int) -> dict:
    """Exact coefficients of v for all alpha-exp <= alpha_max, xi-exp <= xi_max."""
    for comp in (v.plus, v.minus):
        for key in comp.den:
            atom_poly(key, comp.tau)  # raises on a foreign denominator
    return v.tau_series(alpha_max, xi_max)


# ---------------------------------------------------------------------------
# Closed form for crossingless closures


def _quantum_bracket(n: int, tau: int) -> RationalFunction:
    # [n] = (xi^-n - xi^n) / (xi^-1 - xi)
    return RationalFunction(tau, atom_poly(atom_xin(n), tau), Counter([atom_xi1()]))


def unlink_value(m: int, n: int) -> SkeinValue:
    """Value of the crossingless m-strand closure.

    (tau a^-1 [n])^m (1/(1-a^2) + (((tau a q^-1 + q^-n)/(q^-n - q^n))^m - 1)
    / (tau a q^-n-1 + 1)).
    """
    if m <= 0:
        raise ValueError(f"strand count must be positive, got {m}")
    if n < 1:
        raise ValueError(f"potential exponent must be at least 1, got {n}")
    comps = []
    for tau in (1, -1):
        xin = atom_poly(atom_xin(n), tau)
        top = Laurent({(1, -1): Fraction(tau), (0, -n): Fraction(1)})
        head = RationalFunction(tau, Laurent.one(), Counter([ATOM_ALPHA]))
        ratio_pow = RationalFunction(tau, top ** m - xin ** m, Counter({atom_xin(n): m}))
        tail = RationalFunction(tau, ratio_pow.num, ratio_pow.den + Counter([atom_unit(n)]))
        bracket_pow = RationalFunction(
            tau, atom_poly(atom_xin(n), tau) ** m, Counter({atom_xi1(): m})
        ).scaled(Fraction(tau) ** m, -m, 0)
        comps.append((bracket_pow * (head + tail)).stripped())
    return SkeinValue(n, comps[0], comps[1])


# ---------------------------------------------------------------------------
# Recursion


_memo: dict[tuple, SkeinValue] = {}


def _cyclic_square(w: BraidWord) -> tuple[BraidWord, BraidWord] | None:
    """Split off a cyclically adjacent positive square: (uv, u sigma v)."""
    letters = w.letters
    L = len(letters)
    for p in range(L):
        a = letters[p]
        b = letters[(p + 1) % L]
        if a == b and a[1] == 1:
            base = letters[p:] + letters[:p]
            return (
                BraidWord(w.strands, base[2:]),
                BraidWord(w.strands, base[1:]),
            )
    return None


def _order_key(w: BraidWord) -> tuple:
    return (w.strands, len(w.letters), w.letters)


def _positive_split(w: BraidWord, budget: int) -> tuple[BraidWord, BraidWord] | BraidWord:
    """Find a square to split in some transverse representative of w.

    Returns either the split pair or a strictly better representative to
    restart from (fewer strands or shorter, e.g. after a destabilization).
    """
    pair = _cyclic_square(w)
    if pair is not None:
        return pair
    b = budget
    while True:
        result = markov_search(w, b, max_length=len(w.letters) + 4)
        best = result[0]
        if _order_key(best) < _order_key(w):
            return best
        for cand in result:
            if (cand.strands, len(cand.letters)) > (w.strands, len(w.letters)):
                continue  # longer representatives would break the descent
            pair = _cyclic_square(cand)
            if pair is not None:
                return pair
        if result.complete or b >= MAX_BUDGET:
            raise SkeinBudgetError(w, b)
        b = min(b * 2, MAX_BUDGET)


def evaluate(w: BraidWord, n: int, budget: int = 10**4) -> SkeinValue:
    """Invariant of the closure of w, by memoized skein recursion."""
    if not isinstance(w, BraidWord):
        raise TypeError(f"expected a BraidWord, got {type(w).__name__}")
    if n < 1:
        raise ValueError(f"potential exponent must be at least 1, got {n}")
    if budget < 1:
        raise ValueError("budget must be at least 1")
    return _evaluate(w, n, budget)


def _evaluate(w: BraidWord, n: int, budget: int) -> SkeinValue:
    w = simplify(w)
    key = (w.strands, w.letters, n)
    cached = _memo.get(key)
    if cached is not None:
        return cached
    letters = w.letters
    if not letters:
        value = unlink_value(w.strands, n)
    else:
        neg = next((p for p, (_, s) in enumerate(letters) if s < 0), None)
        if neg is not None:
            i, _ = letters[neg]
            flipped = BraidWord(
                w.strands, letters[:neg] + ((i, 1),) + letters[neg + 1 :]
            )
            deleted = BraidWord(w.strands, letters[:neg] + letters[neg + 1 :])
            smoothing = _evaluate(deleted, n, budget).scaled(1, -1, -n) * _xi_skein(n)
            value = _evaluate(flipped, n, budget).scaled(1, -2, -2 * n) - smoothing.times_tau()
        else:
            found = _positive_split(w, budget)
            if isinstance(found, BraidWord):
                value = _evaluate(found, n, budget)
            else:
                uv, usv = found
                smoothing = _evaluate(usv, n, budget).scaled(1, 1, n) * _xi_skein(n)
                value = _evaluate(uv, n, budget).scaled(1, 2, 2 * n) + smoothing.times_tau()
    _memo[key] = value
    return value


def _xi_skein(n: int) -> SkeinValue:
    # the smoothing coefficient xi^-1 - xi
    poly = atom_poly(atom_xi1(), 1)
    return SkeinValue(
        n,
        RationalFunction.from_laurent(1, poly),
        RationalFunction.from_laurent(-1, poly),
    )


def skein_residual(w: BraidWord, p: int, n: int, budget: int = 10**4) -> SkeinValue:
    """alpha^-1 xi^-n P(positive at p) - alpha xi^n P(negative at p)
    - tau (xi^-1 - xi) P(deleted at p); identically zero.  p is 1-based."""
    if not 1 <= p <= len(w.letters):
        raise ValueError(f"no letter at position {p}")
    i, _ = w.letters[p - 1]
    head, tail = w.letters[: p - 1], w.letters[p:]
    pos = BraidWord(w.strands, head + ((i, 1),) + tail)
    neg = BraidWord(w.strands, head + ((i, -1),) + tail)
    smooth = BraidWord(w.strands, head + tail)
    return (
        evaluate(pos, n, budget).scaled(1, -1, -n)
        - evaluate(neg, n, budget).scaled(1, 1, n)
        - (evaluate(smooth, n, budget) * _xi_skein(n)).times_tau()
    )
