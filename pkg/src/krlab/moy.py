"""Colored trivalent graphs and their Koszul matrix factorizations.

A graph carries oriented edges colored 1 to 3, with color flow conserved at
every internal vertex, and at least one marked point per edge.  A mark of
color c contributes c ring generators: the mark name itself for c = 1, and
elementary symmetric generators name.e1 .. name.ec otherwise.

Each internal vertex (including the formal 2-valent ones sitting between
consecutive marks on a single edge) yields Koszul rows (a U_j, X_j - Y_j)
where X_j, Y_j are the j-th elementary symmetric functions of the outgoing
and incoming alphabets and U_j is the symmetric difference quotient of the
(N+1)-st power sum.  The vertex also records an x-degree shift
-sum_{s<t} i_s i_t over the colors of its outgoing edges.

The factorization of the whole graph is the tensor product of the vertex
pieces over the shared marks, then reduced: internal marks are excluded
through linear rows and contractible summands are split off.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .poly import (
    KIND_A,
    KIND_MARK,
    KIND_SYM,
    BigradedPoly,
    Variable,
    VariableTable,
    divide_exact,
    power_sum_in_elementary,
    substitute,
)
from .mf import (
    GdimSeries,
    KoszulSpec,
    MatrixFactorization,
    cast,
    exclude_variable,
    find_exclusion,
    gdim,
    koszul,
    shift,
    split_contractibles,
)

BOUNDARY = "_"
_NAME = re.compile(r"^[A-Za-z][A-Za-z0-9]*$")


@dataclass(frozen=True)
class MoyGraph:
    """vertices: (id, in-edge ids, out-edge ids); edges: (id, color, from, to);
    marks: (edge-id, alphabet name), listed in order along each edge."""

    vertices: tuple[tuple[str, tuple[str, ...], tuple[str, ...]], ...]
    edges: tuple[tuple[str, int, str, str], ...]
    marks: tuple[tuple[str, str], ...]

    def edge(self, eid: str) -> tuple[str, int, str, str]:
        for e in self.edges:
            if e[0] == eid:
                return e
        raise KeyError(eid)

    def edge_marks(self, eid: str) -> list[str]:
        return [alph for mid, alph in self.marks if mid == eid]

    def is_closed(self) -> bool:
        return all(frm != BOUNDARY and to != BOUNDARY for _, _, frm, to in self.edges)

    def validate(self) -> None:
        ids = [v[0] for v in self.vertices]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate vertex id")
        eids = [e[0] for e in self.edges]
        if len(set(eids)) != len(eids):
            raise ValueError("duplicate edge id")
        by_vertex_in: dict[str, list[str]] = {i: [] for i in ids}
        by_vertex_out: dict[str, list[str]] = {i: [] for i in ids}
        for eid, color, frm, to in self.edges:
            if color not in (1, 2, 3):
                raise ValueError(f"edge {eid}: color {color} not in 1..3")
            if frm != BOUNDARY:
                if frm not in by_vertex_out:
                    raise ValueError(f"edge {eid}: unknown vertex {frm}")
                by_vertex_out[frm].append(eid)
            if to != BOUNDARY:
                if to not in by_vertex_in:
                    raise ValueError(f"edge {eid}: unknown vertex {to}")
                by_vertex_in[to].append(eid)
        for vid, ins, outs in self.vertices:
            if sorted(ins) != sorted(by_vertex_in[vid]) or sorted(outs) != sorted(by_vertex_out[vid]):
                raise ValueError(f"vertex {vid}: incident edge lists inconsistent")
            flow_in = sum(self.edge(e)[1] for e in ins)
            flow_out = sum(self.edge(e)[1] for e in outs)
            if flow_in != flow_out:
                raise ValueError(f"vertex {vid}: color flow {flow_in} != {flow_out}")
            if len(ins) + len(outs) < 2:
                raise ValueError(f"vertex {vid}: valence < 2 (use '{BOUNDARY}' for end points)")
        seen_alphabets = set()
        for mid, alph in self.marks:
            if mid not in set(eids):
                raise ValueError(f"mark on unknown edge {mid}")
            if not _NAME.match(alph) or alph == "a":
                raise ValueError(f"bad alphabet name {alph!r}")
            if alph in seen_alphabets:
                raise ValueError(f"alphabet {alph} used twice")
            seen_alphabets.add(alph)
        for eid in eids:
            if not self.edge_marks(eid):
                raise ValueError(f"edge {eid} has no mark")

    # ring structure -------------------------------------------------------

    def mark_color(self, alph: str) -> int:
        for mid, name in self.marks:
            if name == alph:
                return self.edge(mid)[1]
        raise KeyError(alph)

    def table(self) -> VariableTable:
        entries: list = [("a", KIND_A)]
        for mid, alph in self.marks:
            color = self.edge(mid)[1]
            entries.extend(_mark_entries(alph, color))
        return VariableTable.build(entries)

    def boundary(self) -> tuple[list[tuple[str, int]], list[tuple[str, int]]]:
        """(exits, entrances) as (alphabet, color) pairs."""
        exits, entrances = [], []
        for eid, color, frm, to in self.edges:
            ms = self.edge_marks(eid)
            if frm == BOUNDARY:
                entrances.append((ms[0], color))
            if to == BOUNDARY:
                exits.append((ms[-1], color))
        return exits, entrances

    def boundary_variable_names(self) -> list[str]:
        exits, entrances = self.boundary()
        out: list[str] = []
        for alph, color in exits + entrances:
            out.extend(mark_variables(alph, color))
        return out

    def internal_variable_names(self) -> list[str]:
        boundary = set(self.boundary_variable_names())
        out = []
        for mid, alph in self.marks:
            for nm in mark_variables(alph, self.edge(mid)[1]):
                if nm not in boundary:
                    out.append(nm)
        return out

    def pieces(self) -> list["MoyVertex"]:
        """Internal vertices plus the formal 2-valent ones between marks."""
        out: list[MoyVertex] = []
        for vid, ins, outs in self.vertices:
            in_alph = tuple((self.edge_marks(e)[-1], self.edge(e)[1]) for e in ins)
            out_alph = tuple((self.edge_marks(e)[0], self.edge(e)[1]) for e in outs)
            out.append(MoyVertex(vid, in_alph, out_alph))
        for eid, color, _, _ in self.edges:
            ms = self.edge_marks(eid)
            for i in range(len(ms) - 1):
                out.append(
                    MoyVertex(f"{eid}.{i}", ((ms[i], color),), ((ms[i + 1], color),))
                )
        return out


def _mark_entries(alph: str, color: int):
    if color == 1:
        return [(alph, KIND_MARK)]
    return [(f"{alph}.e{k}", KIND_SYM, k) for k in range(1, color + 1)]


def mark_variables(alph: str, color: int) -> list[str]:
    if color == 1:
        return [alph]
    return [f"{alph}.e{k}" for k in range(1, color + 1)]


@dataclass(frozen=True)
class MoyVertex:
    id: str
    in_alphabets: tuple[tuple[str, int], ...]
    out_alphabets: tuple[tuple[str, int], ...]


def build_graph(
    edges: list[tuple[str, int, str, str]], marks: list[tuple[str, str]]
) -> MoyGraph:
    """Derive the vertex list from edge endpoints and validate."""
    ids: list[str] = []
    for _, _, frm, to in edges:
        for end in (frm, to):
            if end != BOUNDARY and end not in ids:
                ids.append(end)
    vertices = []
    for vid in ids:
        ins = tuple(e[0] for e in edges if e[3] == vid)
        outs = tuple(e[0] for e in edges if e[2] == vid)
        vertices.append((vid, ins, outs))
    g = MoyGraph(tuple(vertices), tuple(edges), tuple(marks))
    g.validate()
    return g


def parse_graph(text: str) -> MoyGraph:
    """Line-oriented description:  v <id> | e <id> <color> <from> <to> |
    m <edge-id> <alphabet>;  '#' starts a comment; '_' is a boundary end."""
    declared: list[str] = []
    edges: list[tuple[str, int, str, str]] = []
    marks: list[tuple[str, str]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        kind = parts[0]
        try:
            if kind == "v" and len(parts) == 2:
                declared.append(parts[1])
            elif kind == "e" and len(parts) == 5:
                edges.append((parts[1], int(parts[2]), parts[3], parts[4]))
            elif kind == "m" and len(parts) == 3:
                marks.append((parts[1], parts[2]))
            else:
                raise ValueError(f"unrecognized line {lineno}: {raw.strip()!r}")
        except ValueError as exc:
            raise ValueError(f"graph syntax error at line {lineno}: {exc}") from None
    g = build_graph(edges, marks)
    derived = {v[0] for v in g.vertices}
    for vid in declared:
        if vid not in derived:
            raise ValueError(f"declared vertex {vid} has no incident edge")
    return g


# ---------------------------------------------------------------------------
# Vertex factorizations


def alphabet_generators(table: VariableTable, alph: str, color: int) -> list[BigradedPoly]:
    return [BigradedPoly.variable(table, nm) for nm in mark_variables(alph, color)]


def _elem_union(table: VariableTable, gen_lists: list[list[BigradedPoly]], j: int) -> BigradedPoly:
    """j-th elementary symmetric function of a disjoint union of alphabets,
    by convolution of the per-alphabet generator lists."""
    acc = [BigradedPoly.one(table)]
    for gens in gen_lists:
        width = len(acc) + len(gens)
        nxt = [BigradedPoly.zero(table) for _ in range(width)]
        for i, p in enumerate(acc):
            nxt[i] = nxt[i] + p
            for k, g in enumerate(gens, start=1):
                nxt[i + k] = nxt[i + k] + p * g
        acc = nxt
    return acc[j] if j < len(acc) else BigradedPoly.zero(table)


def vertex_shift(v: MoyVertex) -> tuple[int, int]:
    colors = [c for _, c in v.out_alphabets]
    total = 0
    for s in range(len(colors)):
        for t in range(s + 1, len(colors)):
            total += colors[s] * colors[t]
    return (0, -total)


def vertex_factorization(v: MoyVertex, n: int, table: VariableTable) -> KoszulSpec:
    """Rows (a U_j, X_j - Y_j) for j = 1..m, m the total color through v."""
    m_out = sum(c for _, c in v.out_alphabets)
    m_in = sum(c for _, c in v.in_alphabets)
    if m_out != m_in:
        raise ValueError(f"vertex {v.id}: color flow violated")
    m = m_out
    if m == 0 or m > 3:
        raise ValueError(f"vertex {v.id}: total color {m} unsupported")
    x_lists = [alphabet_generators(table, alph, c) for alph, c in v.out_alphabets]
    y_lists = [alphabet_generators(table, alph, c) for alph, c in v.in_alphabets]
    xs = [_elem_union(table, x_lists, j) for j in range(1, m + 1)]
    ys = [_elem_union(table, y_lists, j) for j in range(1, m + 1)]
    a = BigradedPoly.variable(table, "a")
    rows = []
    for j in range(1, m + 1):
        u = _difference_quotient(table, xs, ys, j, m, n)
        rows.append((a * u, xs[j - 1] - ys[j - 1]))
    spec = KoszulSpec(table, n, tuple(rows))
    total = BigradedPoly.zero(table)
    for left, right in spec.rows:
        total = total + left * right
    want = a * (power_sum_in_elementary(xs, n + 1) - power_sum_in_elementary(ys, n + 1))
    assert total == want, "vertex potential mismatch"
    return spec


def _difference_quotient(table, xs, ys, j, m, n) -> BigradedPoly:
    """[p(Y1..Y_{j-1}, X_j..X_m) - p(Y1..Y_j, X_{j+1}..X_m)] / (X_j - Y_j),
    computed through a fresh symbol so that X_j = Y_j is allowed."""
    fresh = "tQuot"
    assert fresh not in table
    big = VariableTable(list(table.variables) + [Variable(fresh, KIND_SYM, (0, 2 * j))])
    t = BigradedPoly.variable(big, fresh)
    up = [cast(p, big) for p in xs]
    yp = [cast(p, big) for p in ys]
    hi_args = yp[: j - 1] + [t] + up[j:]
    lo_args = yp[:j] + up[j:]
    numer = power_sum_in_elementary(hi_args, n + 1) - power_sum_in_elementary(lo_args, n + 1)
    quot = divide_exact(numer, t - yp[j - 1])
    return substitute(quot, {fresh: xs[j - 1]}, table)


# ---------------------------------------------------------------------------
# Whole-graph factorizations


def graph_potential(graph: MoyGraph, n: int, table: VariableTable) -> BigradedPoly:
    a = BigradedPoly.variable(table, "a")
    exits, entrances = graph.boundary()
    w = BigradedPoly.zero(table)
    for alph, color in exits:
        gens = alphabet_generators(table, alph, color)
        w = w + a * power_sum_in_elementary(gens, n + 1)
    for alph, color in entrances:
        gens = alphabet_generators(table, alph, color)
        w = w - a * power_sum_in_elementary(gens, n + 1)
    return w


def reduced_graph_spec(graph: MoyGraph, n: int) -> tuple[KoszulSpec, tuple[int, int]]:
    """Concatenated vertex rows with internal marks excluded where linear."""
    graph.validate()
    table = graph.table()
    rows: list = []
    sa = sx = 0
    for v in graph.pieces():
        spec = vertex_factorization(v, n, table)
        rows.extend(spec.rows)
        da, dx = vertex_shift(v)
        sa += da
        sx += dx
    spec = KoszulSpec(table, n, tuple(rows))
    internal = graph.internal_variable_names()
    while True:
        found = find_exclusion(spec, internal)
        if found is None:
            break
        spec = exclude_variable(spec, found[0], found[1]).spec_after
    return spec, (sa, sx)


def graph_factorization(graph: MoyGraph, n: int) -> MatrixFactorization:
    spec, (sa, sx) = reduced_graph_spec(graph, n)
    M = split_contractibles(shift(koszul(spec), sa, sx))
    want = cast(graph_potential(graph, n, graph.table()), spec.table)
    assert M.potential == want, "boundary potential mismatch"
    return M


def graph_gdim(graph: MoyGraph, n: int, x_truncation: int) -> GdimSeries:
    """Graded dimension over the boundary ring (over everything if closed)."""
    M = graph_factorization(graph, n)
    if graph.is_closed():
        return gdim(M, x_truncation)
    kill = ["a"] + [v for v in graph.boundary_variable_names() if v in M.table]
    return gdim(M, x_truncation, kill=kill)


def with_extra_mark(graph: MoyGraph, edge_id: str, alph: str) -> MoyGraph:
    """Insert one more marked point at the far end of an edge's mark list."""
    graph.edge(edge_id)
    marks = []
    inserted = False
    for mid, name in graph.marks:
        marks.append((mid, name))
        if mid == edge_id and not inserted:
            inserted = True
            marks.append((edge_id, alph))
    g = MoyGraph(graph.vertices, graph.edges, tuple(marks))
    g.validate()
    return g


# ---------------------------------------------------------------------------
# Named graphs


def builtin_graph(name: str) -> MoyGraph:
    builders = {
        "circle": _circle,
        "wide-edge": _wide_edge,
        "theta-split": _theta_split,
        "r3-gamma": _r3_gamma,
        "r3-gamma0": _r3_gamma0,
        "r3-gamma1": _r3_gamma1,
        "crossing-gamma0": _crossing_gamma0,
        "crossing-gamma1": _crossing_gamma1,
    }
    if name not in builders:
        raise ValueError(f"unknown builtin graph {name!r} (known: {', '.join(sorted(builders))})")
    return builders[name]()


def builtin_graph_names() -> list[str]:
    return [
        "circle",
        "wide-edge",
        "theta-split",
        "r3-gamma",
        "r3-gamma0",
        "r3-gamma1",
        "crossing-gamma0",
        "crossing-gamma1",
    ]


def _circle() -> MoyGraph:
    return build_graph([("c", 1, "V", "V")], [("c", "x")])


def _wide_edge() -> MoyGraph:
    # plain 2-colored edge, entrance Y at the bottom, exit X at the top
    return build_graph([("e", 2, BOUNDARY, BOUNDARY)], [("e", "Y"), ("e", "X")])


def _theta_split() -> MoyGraph:
    # 2-edge splits into two 1-edges (marks x5, x6) and merges back
    edges = [
        ("b", 2, BOUNDARY, "S"),
        ("l", 1, "S", "M"),
        ("r", 1, "S", "M"),
        ("t", 2, "M", BOUNDARY),
    ]
    marks = [("b", "Y"), ("l", "x5"), ("r", "x6"), ("t", "X")]
    return build_graph(edges, marks)


def _r3_gamma() -> MoyGraph:
    # ladder: 2-colored left strand, 1-colored right strand, two rungs
    edges = [
        ("lb", 2, BOUNDARY, "A"),
        ("lm", 1, "A", "D"),
        ("g1", 1, "A", "B"),
        ("rb", 1, BOUNDARY, "B"),
        ("rm", 2, "B", "C"),
        ("rt", 1, "C", BOUNDARY),
        ("g2", 1, "C", "D"),
        ("lt", 2, "D", BOUNDARY),
    ]
    marks = [
        ("lb", "Y"),
        ("lm", "x7"),
        ("g1", "x9"),
        ("rb", "x6"),
        ("rm", "W"),
        ("rt", "x3"),
        ("g2", "x8"),
        ("lt", "X"),
    ]
    return build_graph(edges, marks)


def _r3_gamma0() -> MoyGraph:
    edges = [("l", 2, BOUNDARY, BOUNDARY), ("r", 1, BOUNDARY, BOUNDARY)]
    marks = [("l", "Y"), ("l", "X"), ("r", "x6"), ("r", "x3")]
    return build_graph(edges, marks)


def _r3_gamma1() -> MoyGraph:
    edges = [
        ("bl", 2, BOUNDARY, "M"),
        ("br", 1, BOUNDARY, "M"),
        ("mid", 3, "M", "S"),
        ("tl", 2, "S", BOUNDARY),
        ("tr", 1, "S", BOUNDARY),
    ]
    marks = [("bl", "Y"), ("br", "x6"), ("mid", "V"), ("tl", "X"), ("tr", "x3")]
    return build_graph(edges, marks)


def _crossing_gamma0() -> MoyGraph:
    edges = [("l", 1, BOUNDARY, BOUNDARY), ("r", 1, BOUNDARY, BOUNDARY)]
    marks = [("l", "y2"), ("l", "x1"), ("r", "x2"), ("r", "y1")]
    return build_graph(edges, marks)


def _crossing_gamma1() -> MoyGraph:
    edges = [
        ("bl", 1, BOUNDARY, "m"),
        ("br", 1, BOUNDARY, "m"),
        ("mid", 2, "m", "s"),
        ("tl", 1, "s", BOUNDARY),
        ("tr", 1, "s", BOUNDARY),
    ]
    marks = [("bl", "y2"), ("br", "x2"), ("mid", "W"), ("tl", "x1"), ("tr", "y1")]
    return build_graph(edges, marks)
