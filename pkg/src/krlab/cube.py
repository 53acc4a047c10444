"""Resolution cubes: chain complexes of matrix factorizations for closed braids.

Each crossing of a braid word resolves in two ways.  The oriented resolution
keeps the two strands parallel; the wide resolution merges them through a
2-colored edge.  Writing s = x2 - x1 for the corner marks x1 (top left exit),
y1 (top right exit), y2 (bottom left entrance), x2 (bottom right entrance),
both resolutions are two-row Koszul factorizations sharing their first row:

    F  = (a (U1 + x1 U2),  x1 + y1 - x2 - y2)
    G0 = (a s U2,          x1 - y2)                    oriented
    G1 = (a U2,            s (x1 - y2))    with {0,-1}  wide

U1, U2 are difference quotients of the two-variable power sum p_{2,N+1} in
the elementary symmetric functions of the top and bottom alphabets.  The
crossing maps chi are diagonal on the Koszul subset basis: the factor s jumps
between the left and the right entry of the G row, so the diagonal entry is s
exactly on the masks containing the G row (for chi^1) or avoiding it (for
chi^0).  Both composites equal s Id on the nose.

A positive crossing contributes Gamma1<1>{1,N} -> Gamma0<1>{1,N-1} in
homological degrees -1, 0; a negative one Gamma0<1>{-1,-N+1} ->
Gamma1<1>{-1,-N} in degrees 0, 1.  The closure of the braid word is marked
with one variable per arc, the tensor cube is assembled with sign
(-1)^(number of earlier crossings already resolved), and marks are excluded
through the state-independent rows so that the same substitution applies in
every cube vertex.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .braid import BraidWord
from .mf import (
    KoszulSpec,
    Matrix,
    MatrixFactorization,
    compose,
    exclude_variable,
    find_constant_entry,
    find_exclusion,
    koszul,
    koszul_masks,
    split_contractibles_with_maps,
)
from .moy import _difference_quotient
from .poly import (
    KIND_A,
    KIND_MARK,
    BigradedPoly,
    VariableTable,
    substitute,
)

POSITIVE = "positive"
NEGATIVE = "negative"

MatPair = tuple[Matrix, Matrix]  # parity-preserving map, one matrix per parity


# ---------------------------------------------------------------------------
# Local crossing models


def _crossing_rows(table: VariableTable, n: int, names):
    """Shared row, both resolution rows and the jumping factor s = x2 - x1."""
    x1, y1, y2, x2 = (BigradedPoly.variable(table, nm) for nm in names)
    a = BigradedPoly.variable(table, "a")
    xs = [x1 + y1, x1 * y1]  # elementary symmetric in the exits
    ys = [x2 + y2, x2 * y2]  # ... and in the entrances
    u1 = _difference_quotient(table, xs, ys, 1, 2, n)
    u2 = _difference_quotient(table, xs, ys, 2, 2, n)
    s = x2 - x1
    f_row = (a * (u1 + x1 * u2), xs[0] - ys[0])
    g0_row = (a * s * u2, x1 - y2)
    g1_row = (a * u2, s * (x1 - y2))
    return f_row, g0_row, g1_row, s


def check_even_morphism(
    src: MatrixFactorization,
    tgt: MatrixFactorization,
    mats: MatPair,
    da: int,
    dx: int,
) -> None:
    """Assert mats is a parity-preserving chain map of degree (0, da, dx)."""
    for par in (0, 1):
        sbasis = src.basis(par)
        tbasis = tgt.basis(par)
        for (ti, si), p in mats[par].items():
            deg = p.bidegree()
            if deg is None:
                continue
            sa, sx = sbasis[si]
            ta, tx = tbasis[ti]
            want = (da + sa - ta, dx + sx - tx)
            if deg != want:
                raise AssertionError(f"morphism entry degree {deg}, expected {want}")
    for par in (0, 1):
        left = compose(tgt.differential(par), mats[par])
        right = compose(mats[(par + 1) % 2], src.differential(par))
        if left != right:
            raise AssertionError("morphism does not commute with the differentials")


@dataclass(frozen=True)
class CrossingModel:
    """Both resolutions of one crossing with the explicit chi maps between them.

    gamma1 carries the wide resolution's {0,-1} shift.  chi0: gamma0 -> gamma1
    and chi1: gamma1 -> gamma0 are (mat0, mat1) pairs over the rank-4 Koszul
    bases; their composites equal s Id exactly.
    """

    kind: str
    n: int
    table: VariableTable
    marks: tuple[str, str, str, str]  # (x1, y1, y2, x2)
    f_row: tuple[BigradedPoly, BigradedPoly]
    g0_row: tuple[BigradedPoly, BigradedPoly]
    g1_row: tuple[BigradedPoly, BigradedPoly]
    s: BigradedPoly
    gamma0: MatrixFactorization
    gamma1: MatrixFactorization
    chi0: MatPair
    chi1: MatPair


def _chi_pair(table: VariableTable, s: BigradedPoly, on_set: bool) -> MatPair:
    # two-row masks: parity 0 holds {00, 11}, parity 1 holds {01, 10};
    # the G row is bit 1, set exactly in the second mask of each list
    one = BigradedPoly.one(table)
    lo, hi = (one, s) if on_set else (s, one)
    return ({(0, 0): lo, (1, 1): hi}, {(0, 0): lo, (1, 1): hi})


def crossing_model(
    kind: str, marks, n: int, table: VariableTable | None = None
) -> CrossingModel:
    """Local models and chi maps for one crossing on four distinct marks."""
    if kind not in (POSITIVE, NEGATIVE):
        raise ValueError(f"unknown crossing kind {kind!r}")
    marks = tuple(marks)
    if len(marks) != 4 or len(set(marks)) != 4:
        raise ValueError("crossing_model needs four distinct marks")
    if n < 1:
        raise ValueError("n must be a positive integer")
    if table is None:
        table = VariableTable.build(
            [("a", KIND_A)] + [(nm, KIND_MARK) for nm in marks]
        )
    for nm in marks:
        if nm not in table:
            raise ValueError(f"mark {nm} missing from the table")
    f_row, g0_row, g1_row, s = _crossing_rows(table, n, marks)
    gamma0 = koszul(KoszulSpec(table, n, (f_row, g0_row)))
    gamma1 = koszul(KoszulSpec(table, n, (f_row, g1_row))).shifted(0, -1)

    a = BigradedPoly.variable(table, "a")
    w = BigradedPoly.zero(table)
    for nm, sign in zip(marks, (1, 1, -1, -1)):
        v = BigradedPoly.variable(table, nm)
        w = w + (v ** (n + 1) if sign > 0 else -(v ** (n + 1)))
    w = a * w
    assert gamma0.potential == w and gamma1.potential == w, "crossing potential"

    chi1 = _chi_pair(table, s, on_set=True)
    chi0 = _chi_pair(table, s, on_set=False)
    check_even_morphism(gamma1, gamma0, chi1, 0, 1)
    check_even_morphism(gamma0, gamma1, chi0, 0, 1)
    s_id = {(i, i): s for i in range(2)}
    for par in (0, 1):
        assert compose(chi1[par], chi0[par]) == s_id, "chi^1 chi^0 != s Id"
        assert compose(chi0[par], chi1[par]) == s_id, "chi^0 chi^1 != s Id"
    return CrossingModel(
        kind, n, table, marks, f_row, g0_row, g1_row, s, gamma0, gamma1, chi0, chi1
    )


# ---------------------------------------------------------------------------
# Closure marking

# A node (gap, position) is the point of the closed diagram at the given
# strand position in the gap above crossing number gap (cyclically).  An arc
# is a maximal run of nodes not interrupted by a crossing; each arc carries an
# ordered chain of marks, one by default.


@dataclass(frozen=True)
class _Arc:
    index: int
    circle: bool
    marks: tuple[str, ...]

    def bottom(self) -> str:
        return self.marks[0]

    def top(self) -> str:
        return self.marks[-1]


def _closure_arcs(word: BraidWord, extra_marks) -> tuple[list[_Arc], dict]:
    m = word.strands
    c = len(word.letters)
    gaps = max(c, 1)
    touched = [set() for _ in range(gaps)]
    for t, (i, _) in enumerate(word.letters):
        touched[t].update((i, i + 1))

    parent: dict[tuple[int, int], tuple[int, int]] = {
        (g, p): (g, p) for g in range(gaps) for p in range(1, m + 1)
    }

    def find(node):
        while parent[node] != node:
            parent[node] = parent[parent[node]]
            node = parent[node]
        return node

    for g in range(gaps):
        below = (g - 1) % gaps
        for p in range(1, m + 1):
            if c and p in touched[g]:
                continue  # the crossing under this gap cuts position p
            if below == g:
                continue
            parent[find((below, p))] = find((g, p))

    members: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for g in range(gaps):
        for p in range(1, m + 1):
            members.setdefault(find((g, p)), []).append((g, p))

    extra_count: dict[tuple[int, int], int] = {}
    for node in extra_marks:
        node = (int(node[0]), int(node[1]))
        if node not in parent:
            raise ValueError(f"no such point on the closed diagram: {node}")
        root = find(node)
        extra_count[root] = extra_count.get(root, 0) + 1

    arcs: list[_Arc] = []
    node_arc: dict[tuple[int, int], int] = {}
    seen: dict[tuple[int, int], int] = {}
    for g in range(gaps):
        for p in range(1, m + 1):
            root = find((g, p))
            if root in seen:
                node_arc[(g, p)] = seen[root]
                continue
            idx = len(arcs)
            seen[root] = idx
            node_arc[(g, p)] = idx
            pos = members[root][0][1]
            circle = all(pos not in touched[g2] for g2 in range(gaps)) or c == 0
            names = [f"x{idx}"]
            for k in range(extra_count.get(root, 0)):
                names.append(f"x{idx}" + chr(ord("b") + k))
            arcs.append(_Arc(idx, circle, tuple(names)))
    return arcs, node_arc


# ---------------------------------------------------------------------------
# The chain complex


@dataclass
class Summand:
    """One cube vertex inside a term: its factorization and basis offsets."""

    state: tuple[int, ...] | None
    mf: MatrixFactorization
    off0: int = 0
    off1: int = 0


class ChainComplexOfMF:
    """Finite complex of matrix factorizations with an even differential d_chi.

    terms maps homological degree to the direct sum of its summands; d_chi
    maps degree i to the (mat0, mat1) pair of the map into degree i+1.  blocks
    holds the same data per summand pair, keyed (i, target index, source
    index) with indices local to the summand lists.
    """

    def __init__(self, table, n, summands, blocks, check: bool = True):
        self.table = table
        self.n = n
        self.summands: dict[int, list[Summand]] = {
            i: list(parts) for i, parts in sorted(summands.items()) if parts
        }
        self.blocks: dict[tuple[int, int, int], MatPair] = dict(blocks)
        self.terms: dict[int, MatrixFactorization] = {}
        self.d_chi: dict[int, MatPair] = {}
        self._assemble()
        if check:
            self.verify()

    def degrees(self) -> list[int]:
        return sorted(self.summands)

    def _assemble(self) -> None:
        for i, parts in self.summands.items():
            off0 = off1 = 0
            basis0: list[tuple[int, int]] = []
            basis1: list[tuple[int, int]] = []
            d0: Matrix = {}
            d1: Matrix = {}
            potential = None
            for part in parts:
                part.off0, part.off1 = off0, off1
                mf = part.mf
                if potential is None:
                    potential = mf.potential
                elif mf.potential != potential:
                    raise AssertionError("summand potentials differ")
                basis0.extend(mf.basis0)
                basis1.extend(mf.basis1)
                for (ti, si), p in mf.d0.items():
                    d0[(ti + off1, si + off0)] = p
                for (ti, si), p in mf.d1.items():
                    d1[(ti + off0, si + off1)] = p
                off0 += len(mf.basis0)
                off1 += len(mf.basis1)
            self.terms[i] = MatrixFactorization(
                self.table, self.n, potential, basis0, basis1, d0, d1, check=False
            )
        for (i, ti, si), mats in self.blocks.items():
            src = self.summands[i][si]
            tgt = self.summands[i + 1][ti]
            acc = self.d_chi.setdefault(i, ({}, {}))
            for par, offs in ((0, (src.off0, tgt.off0)), (1, (src.off1, tgt.off1))):
                soff, toff = offs
                for (bi, bj), p in mats[par].items():
                    acc[par][(bi + toff, bj + soff)] = p

    def verify(self) -> None:
        """Assert every defining identity of a complex of factorizations."""
        for i, term in self.terms.items():
            term.verify()
            if not term.potential.is_zero():
                raise AssertionError(f"term {i} has nonzero potential")
        for i, mats in self.d_chi.items():
            tgt = self.terms.get(i + 1)
            if tgt is None:
                if mats[0] or mats[1]:
                    raise AssertionError(f"d_chi out of degree {i} has no target")
                continue
            check_even_morphism(self.terms[i], tgt, mats, 0, 0)
            nxt = self.d_chi.get(i + 1)
            if nxt is not None:
                for par in (0, 1):
                    if compose(nxt[par], mats[par]):
                        raise AssertionError(f"d_chi^2 != 0 out of degree {i}")


# ---------------------------------------------------------------------------
# Building the cube of a closed braid


def _subdivision_row(table, n, upper: str, lower: str):
    """Row of the 2-valent vertex between consecutive marks of one arc."""
    a = BigradedPoly.variable(table, "a")
    up = BigradedPoly.variable(table, upper)
    lo = BigradedPoly.variable(table, lower)
    h = _difference_quotient(table, [up], [lo], 1, 1, n)
    return (a * h, up - lo)


def build_complex(word: BraidWord, n: int, extra_marks=()) -> ChainComplexOfMF:
    """Chain complex of the closure of a braid word, reduced uniformly.

    Marks are assigned one per arc of the closure (extra_marks lists
    (gap, position) points whose arcs receive one additional mark each).
    Marks are then excluded through the state-independent rows; the
    state-dependent G rows never admit exclusions, so every cube vertex stays
    a Koszul factorization over the same retained ring Q[a, surviving marks]
    and d_chi remains strictly well defined.
    """
    if not isinstance(word, BraidWord):
        raise TypeError("build_complex expects a closed braid word")
    if n < 1:
        raise ValueError("n must be a positive integer")
    c = len(word.letters)
    gaps = max(c, 1)
    arcs, node_arc = _closure_arcs(word, extra_marks)

    names: list[str] = []
    for arc in arcs:
        names.extend(arc.marks)
    table = VariableTable.build([("a", KIND_A)] + [(nm, KIND_MARK) for nm in names])

    # state-independent rows: every crossing's F row, then the subdivision
    # rows chaining the marks of each arc (cyclically for free circles)
    shared: list[tuple[BigradedPoly, BigradedPoly]] = []
    crossings = []
    for t, (i, sign) in enumerate(word.letters):
        below = (t - 1) % gaps
        corner_names = (
            arcs[node_arc[(t, i)]].bottom(),
            arcs[node_arc[(t, i + 1)]].bottom(),
            arcs[node_arc[(below, i)]].top(),
            arcs[node_arc[(below, i + 1)]].top(),
        )
        f_row, g0_row, g1_row, s = _crossing_rows(table, n, corner_names)
        shared.append(f_row)
        if sign > 0:
            # wide resolution at homological degree -1, oriented at 0
            by_state = [g1_row, g0_row]
            dx_by_state = (n - 1, n - 1)
        else:
            # oriented resolution at homological degree 0, wide at 1
            by_state = [g0_row, g1_row]
            dx_by_state = (-n + 1, -n - 1)
        crossings.append({"sign": sign, "g": by_state, "s": s, "dx": dx_by_state})
    for arc in arcs:
        k = len(arc.marks)
        if arc.circle:
            for j in range(k):
                shared.append(
                    _subdivision_row(table, n, arc.marks[(j + 1) % k], arc.marks[j])
                )
        else:
            for j in range(k - 1):
                shared.append(_subdivision_row(table, n, arc.marks[j + 1], arc.marks[j]))

    # uniform mark exclusion: only the state-independent rows are eligible,
    # so the same substitution applies in all 2^c vertices
    shared_spec = KoszulSpec(table, n, tuple(shared))
    mark_names = [v.name for v in table.variables if v.kind == KIND_MARK]
    while True:
        found = find_exclusion(shared_spec, mark_names)
        if found is None:
            break
        step = exclude_variable(shared_spec, *found)
        shared_spec = step.spec_after
        table = shared_spec.table
        sub = {step.var: step.image}
        for cr in crossings:
            cr["g"] = [
                (substitute(l, sub, table), substitute(r, sub, table))
                for l, r in cr["g"]
            ]
            cr["s"] = substitute(cr["s"], sub, table)
    shared = list(shared_spec.rows)

    writhe = sum(sign for _, sign in word.letters)
    bases = [-1 if cr["sign"] > 0 else 0 for cr in crossings]
    nrows = len(shared) + c
    masks_by_parity = koszul_masks(nrows)

    vertices: dict[tuple[int, ...], Summand] = {}
    summands: dict[int, list[Summand]] = {}
    positions: dict[tuple[int, ...], tuple[int, int]] = {}
    for state in itertools.product((0, 1), repeat=c):
        rows = list(shared) + [cr["g"][b] for cr, b in zip(crossings, state)]
        spec = KoszulSpec(table, n, tuple(rows))
        if not spec.potential().is_zero():
            raise AssertionError("closed diagram with nonzero potential")
        dx = sum(cr["dx"][b] for cr, b in zip(crossings, state))
        mf = koszul(spec).shifted(writhe, dx, c)
        # left entries carry a, right entries carry marks: nothing contractible
        assert find_constant_entry(mf) is None
        part = Summand(state, mf)
        vertices[state] = part
        deg = sum(base + b for base, b in zip(bases, state))
        summands.setdefault(deg, []).append(part)
    for deg in summands:
        summands[deg].sort(key=lambda part: part.state)
        for pos, part in enumerate(summands[deg]):
            positions[part.state] = (deg, pos)

    one = BigradedPoly.one(table)
    blocks: dict[tuple[int, int, int], MatPair] = {}
    for state in vertices:
        for t in range(c):
            if state[t]:
                continue
            target = tuple(b if k != t else 1 for k, b in enumerate(state))
            sign = -1 if sum(state[:t]) % 2 else 1
            gbit = len(shared) + t
            s = crossings[t]["s"]
            # the jumping factor s sits on the G-set masks for chi^1 (wide to
            # oriented, positive crossings) and on the G-unset masks for chi^0
            want_bit = 1 if crossings[t]["sign"] > 0 else 0
            mats: MatPair = ({}, {})
            for par in (0, 1):
                # the c parity flips swap which mask list underlies basis(par)
                masks = masks_by_parity[(par + c) % 2]
                for idx, mask in enumerate(masks):
                    entry = s if (mask >> gbit & 1) == want_bit else one
                    if sign < 0:
                        entry = -entry
                    if not entry.is_zero():
                        mats[par][(idx, idx)] = entry
            i, si = positions[state]
            _, ti = positions[target]
            blocks[(i, ti, si)] = mats
    return ChainComplexOfMF(table, n, summands, blocks)


# ---------------------------------------------------------------------------
# Gaussian elimination of isomorphism blocks


def _apply_even(mats: MatPair, vec):
    out = {}
    for (par, idx), coeff in vec.items():
        for (ti, si), p in mats[par].items():
            if si != idx:
                continue
            key = (par, ti)
            cur = out.get(key)
            s = p * coeff if cur is None else cur + p * coeff
            if s.is_zero():
                out.pop(key, None)
            else:
                out[key] = s
    return out


def _transport_block(mats: MatPair, src_reds, tgt_reds, src_after) -> MatPair:
    """pi_tgt . mats . iota_src through chains of tracked reductions."""
    out: MatPair = ({}, {})
    table = src_after.table
    for par in (0, 1):
        for j in range(len(src_after.basis(par))):
            vec = {(par, j): BigradedPoly.one(table)}
            for red in reversed(src_reds):
                vec = red.iota(vec)
            vec = _apply_even(mats, vec)
            for red in tgt_reds:
                vec = red.pi(vec)
            for (par2, ti), p in vec.items():
                assert par2 == par  # even maps preserve parity
                out[par][(ti, j)] = p
    return out


def _invert_constant(mat: Matrix, size: int):
    """Inverse of a constant square matrix, or None if singular."""
    rows = [[Fraction(0)] * size for _ in range(size)]
    for (i, j), p in mat.items():
        if not p.is_constant():
            return None
        rows[i][j] = p.constant_value()
    inv = [[Fraction(1) if i == j else Fraction(0) for j in range(size)] for i in range(size)]
    for col in range(size):
        pivot = next((r for r in range(col, size) if rows[r][col]), None)
        if pivot is None:
            return None
        rows[col], rows[pivot] = rows[pivot], rows[col]
        inv[col], inv[pivot] = inv[pivot], inv[col]
        scale = rows[col][col]
        rows[col] = [v / scale for v in rows[col]]
        inv[col] = [v / scale for v in inv[col]]
        for r in range(size):
            if r == col or not rows[r][col]:
                continue
            factor = rows[r][col]
            rows[r] = [v - factor * w for v, w in zip(rows[r], rows[col])]
            inv[r] = [v - factor * w for v, w in zip(inv[r], inv[col])]
    return inv


def _iso_block(src: Summand, tgt: Summand, mats: MatPair):
    """Constant-invertible block test; returns per-parity inverses or None."""
    invs = []
    for par in (0, 1):
        ssize = len(src.mf.basis(par))
        tsize = len(tgt.mf.basis(par))
        if ssize != tsize:
            return None
        inv = _invert_constant(mats[par], ssize)
        if inv is None:
            return None
        invs.append(inv)
    return invs


def _correct(eps: Matrix, gamma: Matrix, phi_inv, delta: Matrix) -> Matrix:
    """eps - gamma phi^{-1} delta with phi^{-1} a dense constant matrix."""
    out = dict(eps)
    cols: dict[int, list[tuple[int, BigradedPoly]]] = {}
    for (l, j), p in delta.items():
        cols.setdefault(j, []).append((l, p))
    for (i, k), g in gamma.items():
        for j, col in cols.items():
            for l, d in col:
                coeff = phi_inv[k][l]
                if not coeff:
                    continue
                corr = g * d * (-coeff)
                key = (i, j)
                cur = out.get(key)
                s = corr if cur is None else cur + corr
                if s.is_zero():
                    out.pop(key, None)
                else:
                    out[key] = s
    return out


def gaussian_eliminate(C: ChainComplexOfMF) -> ChainComplexOfMF:
    """Remove summand pairs joined by an isomorphism block of d_chi.

    First splits contractible summands inside each term (transporting the
    blocks through the tracked reductions), then repeatedly cancels a source
    and a target summand whose connecting block is constant-invertible,
    correcting the parallel blocks by eps' = eps - gamma phi^{-1} delta.
    """
    summands = {i: list(parts) for i, parts in C.summands.items()}
    blocks = dict(C.blocks)

    reductions: dict[tuple[int, int], list] = {}
    for i, parts in summands.items():
        for pos, part in enumerate(parts):
            reds = split_contractibles_with_maps(part.mf)
            if reds:
                reductions[(i, pos)] = reds
                summands[i][pos] = Summand(part.state, reds[-1].after)
    if reductions:
        moved = {}
        for (i, ti, si), mats in blocks.items():
            src_reds = reductions.get((i, si), [])
            tgt_reds = reductions.get((i + 1, ti), [])
            if src_reds or tgt_reds:
                mats = _transport_block(mats, src_reds, tgt_reds, summands[i][si].mf)
            moved[(i, ti, si)] = mats
        blocks = moved

    while True:
        found = None
        for (i, ti, si), mats in blocks.items():
            invs = _iso_block(summands[i][si], summands[i + 1][ti], mats)
            if invs is not None:
                found = (i, ti, si, invs)
                break
        if found is None:
            break
        i, ti, si, invs = found
        eps_keys = [
            (uj, vi)
            for uj in range(len(summands[i]))
            if uj != si
            for vi in range(len(summands[i + 1]))
            if vi != ti
        ]
        corrected = {}
        for uj, vi in eps_keys:
            eps = blocks.get((i, vi, uj), ({}, {}))
            gamma = blocks.get((i, vi, si), ({}, {}))
            delta = blocks.get((i, ti, uj), ({}, {}))
            mats = tuple(
                _correct(eps[par], gamma[par], invs[par], delta[par]) for par in (0, 1)
            )
            corrected[(uj, vi)] = mats

        src_map = {}
        for pos in range(len(summands[i])):
            if pos != si:
                src_map[pos] = len(src_map)
        tgt_map = {}
        for pos in range(len(summands[i + 1])):
            if pos != ti:
                tgt_map[pos] = len(tgt_map)
        summands[i] = [p for pos, p in enumerate(summands[i]) if pos != si]
        summands[i + 1] = [p for pos, p in enumerate(summands[i + 1]) if pos != ti]

        rebuilt = {}
        for (j, tj, sj), mats in blocks.items():
            if j == i:
                continue  # replaced by the corrected family below
            if j == i - 1:
                if tj == si:
                    continue  # maps into the cancelled source are dropped
                rebuilt[(j, src_map[tj], sj)] = mats
            elif j == i + 1:
                if sj == ti:
                    continue  # maps out of the cancelled target are dropped
                rebuilt[(j, tj, tgt_map[sj])] = mats
            else:
                rebuilt[(j, tj, sj)] = mats
        for (uj, vi), mats in corrected.items():
            if mats[0] or mats[1]:
                rebuilt[(i, tgt_map[vi], src_map[uj])] = mats
        blocks = rebuilt

    return ChainComplexOfMF(C.table, C.n, summands, blocks)
