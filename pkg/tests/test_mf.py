"""Matrix factorization layer: Koszul builds, moves, reductions, gdim."""

from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from krlab.poly import (
    KIND_A,
    KIND_MARK,
    BigradedPoly,
    VariableTable,
    complete_symmetric_in_elementary,
    substitute,
)
from krlab.mf import (
    ChainVector,
    GdimSeries,
    KoszulSpec,
    MatrixFactorization,
    apply_matrix,
    exclude_variable,
    exclusion_reduction,
    find_constant_entry,
    find_exclusion,
    gdim,
    koszul,
    koszul_row_shift,
    row_operation,
    shift,
    split_contractibles,
    split_contractibles_with_maps,
    tensor,
    twist,
)


def marks_table(*names: str) -> VariableTable:
    return VariableTable.build([("a", KIND_A)] + [(nm, KIND_MARK) for nm in names])


def var(table: VariableTable, name: str) -> BigradedPoly:
    return BigradedPoly.variable(table, name)


def h_two_vars(table: VariableTable, x: str, y: str, degree: int) -> BigradedPoly:
    """Complete homogeneous polynomial of the two marks x, y."""
    px, py = var(table, x), var(table, y)
    return complete_symmetric_in_elementary([px + py, px * py], degree)


def arc_spec(n: int) -> KoszulSpec:
    table = marks_table("x", "y")
    a, x, y = (var(table, nm) for nm in "axy")
    return KoszulSpec(table, n, ((a * h_two_vars(table, "x", "y", n), x - y),))


def circle_spec(n: int) -> KoszulSpec:
    table = marks_table("x")
    a, x = var(table, "a"), var(table, "x")
    return KoszulSpec(table, n, ((Fraction(n + 1) * a * x**n, BigradedPoly.zero(table)),))


def mf_equal(M: MatrixFactorization, M2: MatrixFactorization) -> bool:
    return (
        M.table == M2.table
        and M.n == M2.n
        and M.potential == M2.potential
        and M.basis0 == M2.basis0
        and M.basis1 == M2.basis1
        and M.d0 == M2.d0
        and M.d1 == M2.d1
    )


class TestKoszulConstruction:
    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_arc_potential(self, n):
        M = koszul(arc_spec(n))
        table = M.table
        a, x, y = (var(table, nm) for nm in "axy")
        assert M.potential == a * (x ** (n + 1) - y ** (n + 1))
        assert M.rank() == 2

    def test_arc_entry_degrees(self):
        M = koszul(arc_spec(2))
        assert M.basis0 == [(0, 0)]
        # odd generator degree (1 - 2, n + 1 - 2n) = (-1, 1 - n)
        assert M.basis1 == [(-1, -1)]

    @pytest.mark.parametrize("n", [1, 2, 4])
    def test_circle_generator_degree(self, n):
        M = koszul(circle_spec(n))
        assert M.basis0 == [(0, 0)]
        assert M.basis1 == [(-1, 1 - n)]
        assert M.potential.is_zero()

    def test_row_degree_mismatch_rejected(self):
        table = marks_table("x")
        a, x = var(table, "a"), var(table, "x")
        with pytest.raises(ValueError):
            KoszulSpec(table, 2, ((a * x, x),))

    def test_two_rows_match_tensor(self):
        n = 2
        table = marks_table("x", "y", "z", "w")
        a = var(table, "a")
        r1 = (a * h_two_vars(table, "x", "y", n), var(table, "x") - var(table, "y"))
        r2 = (a * h_two_vars(table, "z", "w", n), var(table, "z") - var(table, "w"))
        combined = koszul(KoszulSpec(table, n, (r1, r2)))
        factored = tensor(
            koszul(KoszulSpec(table, n, (r1,))), koszul(KoszulSpec(table, n, (r2,)))
        )
        assert mf_equal(combined, factored)

    def test_three_rows_match_iterated_tensor(self):
        n = 1
        table = marks_table("x", "y", "z")
        a = var(table, "a")
        rows = [
            (a * h_two_vars(table, "x", "y", n), var(table, "x") - var(table, "y")),
            (a * h_two_vars(table, "y", "z", n), var(table, "y") - var(table, "z")),
            (Fraction(2) * a * var(table, "z"), BigradedPoly.zero(table)),
        ]
        combined = koszul(KoszulSpec(table, n, tuple(rows)))
        step = koszul(KoszulSpec(table, n, (rows[0],)))
        step = tensor(step, koszul(KoszulSpec(table, n, (rows[1],))))
        step = tensor(step, koszul(KoszulSpec(table, n, (rows[2],))))
        assert mf_equal(combined, step)

    def test_swap_is_shift(self):
        n = 3
        table = marks_table("x", "y")
        a, x, y = (var(table, nm) for nm in "axy")
        left = a * h_two_vars(table, "x", "y", n)
        right = x - y
        swapped = koszul(KoszulSpec(table, n, ((right, left),)))
        # (a1, a0) is (a0, a1)<1>{1 - dega a1, n + 1 - degx a1}
        shifted = shift(koszul(KoszulSpec(table, n, ((left, right),))), 1, n - 1, flip=1)
        assert mf_equal(swapped, shifted)


class TestMoves:
    def _pair_spec(self, n=1):
        table = marks_table("x", "y")
        a, x, y = (var(table, nm) for nm in "axy")
        rows = (
            (a * h_two_vars(table, "x", "y", n), x - y),
            (a * (x + y), y - x),
        )
        return KoszulSpec(table, n, rows)

    def test_row_operation_updates_both_rows(self):
        spec = self._pair_spec()
        c = BigradedPoly.constant(spec.table, Fraction(3))
        out = row_operation(spec, 0, 1, c)
        assert out.rows[0][1] == spec.rows[0][1]
        assert out.rows[1][0] == spec.rows[1][0]
        assert out.rows[0][0] == spec.rows[0][0] + c * spec.rows[1][0]
        assert out.rows[1][1] == spec.rows[1][1] - c * spec.rows[0][1]
        assert out.potential() == spec.potential()

    def test_row_operation_degree_guard(self):
        spec = self._pair_spec()
        bad = var(spec.table, "x")
        with pytest.raises(ValueError):
            row_operation(spec, 0, 1, bad)

    def test_twist_updates_left_entries(self):
        n = 1
        spec = self._pair_spec(n)
        a = var(spec.table, "a")
        out = twist(spec, 0, 1, a)
        assert out.rows[0][0] == spec.rows[0][0] + a * spec.rows[1][1]
        assert out.rows[1][0] == spec.rows[1][0] - a * spec.rows[0][1]
        assert out.potential() == spec.potential()

    def test_crossing_row_operation_produces_wide_row(self):
        # the two-row presentation of a crossing turns into the wide-edge
        # Koszul form after one row operation in the x-marks
        n = 2
        table = marks_table("x1", "y1", "x2", "y2")
        a = var(table, "a")
        x1, y1, x2, y2 = (var(table, nm) for nm in ("x1", "y1", "x2", "y2"))
        # generic rows with the standard right entries
        r0 = (a * (x1 + y1 + x2 + y2) ** n, x1 + y1 - x2 - y2)
        u2 = a * h_two_vars(table, "x2", "y2", n - 1)
        r1 = (u2 * (x2 - x1), x1 - y2)
        spec = KoszulSpec(table, n, (r0, r1))
        moved = row_operation(spec, 1, 0, BigradedPoly.zero(table))
        assert moved.rows == spec.rows


class TestExclusion:
    def test_exclude_substitutes_and_drops(self):
        n = 2
        table = marks_table("x", "y", "z")
        a, x, y, z = (var(table, nm) for nm in "axyz")
        rows = (
            (a * h_two_vars(table, "x", "y", n), x - y),
            (a * h_two_vars(table, "y", "z", n), y - z),
        )
        spec = KoszulSpec(table, n, rows)
        step = exclude_variable(spec, 0, "y")
        assert step.var == "y"
        assert "y" not in step.spec_after.table
        assert len(step.spec_after.rows) == 1
        small = step.spec_after.table
        xs, zs = var(small, "x"), var(small, "z")
        assert step.image == xs
        assert step.spec_after.rows[0][1] == xs - zs

    def test_exclude_requires_unit_linear(self):
        n = 1
        table = marks_table("x", "y")
        a, x, y = (var(table, nm) for nm in "axy")
        spec = KoszulSpec(table, n, ((a * BigradedPoly.one(table), (x - y) * (x + y)),))
        with pytest.raises(ValueError):
            exclude_variable(spec, 0, "x")

    def test_find_exclusion_skips_quadratic(self):
        n = 1
        table = marks_table("x", "y")
        a, x, y = (var(table, nm) for nm in "axy")
        spec = KoszulSpec(
            table,
            n,
            (
                (a * BigradedPoly.one(table), x * x - y * y),
                (a * h_two_vars(table, "x", "y", n), x - y),
            ),
        )
        assert find_exclusion(spec, ["x", "y"]) == (1, "x")

    def test_exclusion_reduction_chain_maps(self):
        # two arcs composing to one; total potential is free of y
        n = 1
        table = marks_table("x", "y")
        a, x, y = (var(table, nm) for nm in "axy")
        rows = (
            (a * (x + y), x - y),
            (a * (x + y), y - x),
        )
        spec = KoszulSpec(table, n, rows)
        assert spec.potential().is_zero()
        step = exclude_variable(spec, 1, "y")
        self._check_reduction(exclusion_reduction(step))

    def test_exclusion_reduction_middle_slot(self):
        n = 1
        table = marks_table("x", "y", "z", "t")
        a, x, y, z, t = (var(table, nm) for nm in "axyzt")
        rows = (
            (a * (x + y), x - y),
            (a * (y + z), y - z),
            (Fraction(2) * a * t, BigradedPoly.zero(table)),
        )
        spec = KoszulSpec(table, n, rows)
        assert spec.potential().degree_in("y") == 0
        step = exclude_variable(spec, 1, "y")
        red = exclusion_reduction(step)
        small_table = red.after.table
        xs, zs = var(small_table, "x"), var(small_table, "z")
        assert red.after.potential == var(small_table, "a") * (xs * xs - zs * zs)
        self._check_reduction(red)

    def test_exclusion_rejects_potential_in_variable(self):
        n = 1
        table = marks_table("x", "y")
        a, x, y = (var(table, nm) for nm in "axy")
        rows = (
            (a * (x + y), x - y),
            (a * (x + y), y - Fraction(2) * x),
        )
        spec = KoszulSpec(table, n, rows)
        step = exclude_variable(spec, 1, "y")
        with pytest.raises(ValueError):
            exclusion_reduction(step)

    @staticmethod
    def _check_reduction(red):
        small, big = red.after, red.before
        one = BigradedPoly.one(small.table)
        for par, basis in ((0, small.basis0), (1, small.basis1)):
            for idx in range(len(basis)):
                v: ChainVector = {(par, idx): one}
                assert apply_matrix(big, red.iota(v)) == red.iota(apply_matrix(small, v))
                assert red.pi(red.iota(v)) == v
        big_one = BigradedPoly.one(big.table)
        for par, basis in ((0, big.basis0), (1, big.basis1)):
            for idx in range(len(basis)):
                v = {(par, idx): big_one}
                assert red.pi(apply_matrix(big, v)) == apply_matrix(small, red.pi(v))


class TestSplitting:
    def test_unit_row_contracts_to_zero(self):
        n = 1
        table = marks_table("x")
        a, x = var(table, "a"), var(table, "x")
        w = a * x ** (n + 1)
        spec = KoszulSpec(table, n, ((w, BigradedPoly.one(table)),))
        M = split_contractibles(koszul(spec))
        assert M.rank() == 0

    def test_contractible_tensor_factor_kills_everything(self):
        n = 1
        table = marks_table("x", "y")
        a, x, y = (var(table, nm) for nm in "axy")
        keep = KoszulSpec(table, n, ((a * (x + y), x - y),))
        kill = KoszulSpec(table, n, ((a * y * y, BigradedPoly.one(table)),))
        M = tensor(koszul(keep), koszul(kill))
        reduced = split_contractibles(M)
        assert reduced.rank() == 0

    def test_split_removes_contractible_summand(self):
        n = 2
        arc = koszul(arc_spec(n))
        table = arc.table
        trivial = koszul(KoszulSpec(table, n, ((arc.potential, BigradedPoly.one(table)),)))
        summed = MatrixFactorization(
            table,
            n,
            arc.potential,
            arc.basis0 + trivial.basis0,
            arc.basis1 + trivial.basis1,
            dict(arc.d0) | {(i + 1, j + 1): p for (i, j), p in trivial.d0.items()},
            dict(arc.d1) | {(i + 1, j + 1): p for (i, j), p in trivial.d1.items()},
        )
        reduced = split_contractibles(summed)
        assert mf_equal(reduced, arc)

    def test_split_chain_maps(self):
        n = 1
        table = marks_table("x", "y")
        a, x, y = (var(table, nm) for nm in "axy")
        keep = KoszulSpec(table, n, ((a * (x + y), x - y),))
        kill = KoszulSpec(table, n, ((a * y * y, BigradedPoly.one(table)),))
        M = tensor(koszul(keep), koszul(kill))
        steps = split_contractibles_with_maps(M)
        assert steps
        one = BigradedPoly.one(table)
        for red in steps:
            small, big = red.after, red.before
            for par, basis in ((0, small.basis0), (1, small.basis1)):
                for idx in range(len(basis)):
                    v: ChainVector = {(par, idx): one}
                    assert apply_matrix(big, red.iota(v)) == red.iota(apply_matrix(small, v))
                    assert red.pi(red.iota(v)) == v
            for par, basis in ((0, big.basis0), (1, big.basis1)):
                for idx in range(len(basis)):
                    v = {(par, idx): one}
                    assert red.pi(apply_matrix(big, v)) == apply_matrix(small, red.pi(v))


class TestGdim:
    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_circle_series(self, n):
        M = koszul(circle_spec(n))
        series = gdim(M, x_truncation=8)
        assert series.terms == {(0, 0, 0): 1, (1, -1, 1 - n): 1}

    def test_arc_with_survivor(self):
        M = koszul(arc_spec(2))
        series = gdim(M, x_truncation=10, kill=["a", "y"])
        assert series.terms == {(0, 0, 0): 1}

    def test_requires_killing_a(self):
        M = koszul(circle_spec(1))
        with pytest.raises(ValueError):
            gdim(M, 5, kill=["x"])

    def test_series_shift_and_add(self):
        s = GdimSeries({(0, 0, 0): 1, (1, -1, -1): 1}, 8)
        doubled = s + s
        assert doubled.terms == {(0, 0, 0): 2, (1, -1, -1): 2}
        moved = s.shifted(1, 2, 3)
        assert moved.terms == {(1, 2, 3): 1, (0, 1, 2): 1}
        assert moved.x_truncation == 11

    def test_split_preserves_gdim(self):
        n = 2
        table = marks_table("x", "y")
        a, x, y = (var(table, nm) for nm in "axy")
        keep = KoszulSpec(table, n, ((a * h_two_vars(table, "x", "y", n), x - y),))
        kill = KoszulSpec(table, n, ((a * y ** (n + 1), BigradedPoly.one(table)),))
        M = tensor(koszul(keep), koszul(kill))
        reduced = split_contractibles(M)
        assert gdim(M, 6).same_series(gdim(reduced, 6))


def _random_entry(table, draw_ints, n, dega, degx):
    """Deterministic small homogeneous polynomial of bidegree (dega, degx)."""
    a = var(table, "a")
    marks = [var(table, nm) for nm in table.names() if nm != "a"]
    out = BigradedPoly.zero(table)
    if dega % 2 or degx % 2 or dega < 0 or degx < 0:
        return out
    apow = dega // 2
    xdeg = degx // 2
    for i, coeff in enumerate(draw_ints):
        if not coeff:
            continue
        term = BigradedPoly.constant(table, Fraction(coeff)) * a**apow
        left = xdeg
        for j, m in enumerate(marks):
            take = left if j == len(marks) - 1 else min(left, (i + j) % (left + 1))
            term = term * m**take
            left -= take
        if left == 0:
            out = out + term
    return out


@st.composite
def random_koszul_spec(draw):
    n = draw(st.integers(min_value=1, max_value=2))
    table = marks_table("x", "y")
    nrows = draw(st.integers(min_value=1, max_value=3))
    rows = []
    for _ in range(nrows):
        right_deg = draw(st.sampled_from([2, 4]))
        ints_r = draw(st.lists(st.integers(-2, 2), min_size=2, max_size=3))
        right = _random_entry(table, ints_r, n, 0, right_deg)
        ints_l = draw(st.lists(st.integers(-2, 2), min_size=2, max_size=3))
        left = _random_entry(table, ints_l, n, 2, 2 * n + 2 - right_deg)
        if left.is_zero() and right.is_zero():
            right = var(table, "x") ** (right_deg // 2)
        rows.append((left, right))
    return KoszulSpec(table, n, tuple(rows))


class TestProperties:
    @settings(max_examples=40, deadline=None)
    @given(random_koszul_spec())
    def test_koszul_verifies(self, spec):
        M = koszul(spec)
        assert M.potential == spec.potential()

    @settings(max_examples=30, deadline=None)
    @given(random_koszul_spec(), st.integers(-2, 2), st.integers(-3, 3), st.integers(0, 1))
    def test_shift_verifies(self, spec, da, dx, flip):
        M = koszul(spec)
        S = shift(M, 2 * da, 2 * dx, flip)
        S.verify()
        assert S.potential == M.potential

    @settings(max_examples=30, deadline=None)
    @given(random_koszul_spec())
    def test_split_terminates_and_verifies(self, spec):
        M = split_contractibles(koszul(spec))
        M.verify()
        assert find_constant_entry(M) is None
