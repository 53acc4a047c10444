"""Command-line surface: homology tables, skein values, graph dimensions.

Exit codes separate the failure families: 1 for input that does not parse
(including windows the pipelines refuse), 2 for search-budget exhaustion,
3 for a failed cross-check.  JSON documents carry a stable "schema":
"krlab/1" tag, slices sorted by (eps, i, x), so output is reproducible and
round-trips through module_from_json.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .braid import BraidWord, parse
from .cube import build_complex
from .moy import builtin_graph, builtin_graph_names, graph_gdim, parse_graph
from .qamod import (
    GradedQaModule,
    SliceModule,
    Tail,
    euler_characteristic,
    two_stage_homology,
)
from .skein import (
    SkeinBudgetError,
    SkeinValue,
    evaluate,
    series_expand,
    skein_residual,
    unlink_value,
)


def _fail(code: int, message: str) -> None:
    click.echo(message, err=True)
    sys.exit(code)


def _check_n(n: int) -> None:
    if n < 1:
        _fail(1, "n must be at least 1")


def _braid(text: str, strands: int | None) -> BraidWord:
    cleaned = " ".join(line.split("#", 1)[0] for line in text.splitlines())
    try:
        return parse(cleaned, strands)
    except ValueError as exc:
        _fail(1, f"braid parse error: {exc}")


def _homology(word: BraidWord, n: int, width: int) -> GradedQaModule:
    try:
        return two_stage_homology(build_complex(word, n), x_window=width)
    except ValueError as exc:
        _fail(1, str(exc))


def _skein(word: BraidWord, n: int, budget: int) -> SkeinValue:
    try:
        return evaluate(word, n, budget)
    except SkeinBudgetError as exc:
        _fail(2, str(exc))


def module_json(m: GradedQaModule) -> dict:
    slices = []
    for eps, i, k in sorted(m.slices):
        sl = m.slices[(eps, i, k)]
        slices.append({
            "eps": eps,
            "i": i,
            "x": k,
            "free": list(sl.free),
            "torsion": [[l, t] for l, t in sl.torsion],
        })
    tails = [
        {
            "eps": t.eps,
            "i": t.i,
            "start": t.start,
            "families": [[l, s, list(c)] for l, s, c in t.families],
        }
        for t in sorted(m.tails, key=lambda t: (t.eps, t.i, t.start))
    ]
    return {
        "schema": "krlab/1",
        "n": m.n,
        "window": list(m.window),
        "slices": slices,
        "tail": tails,
    }


def module_from_json(doc: dict) -> GradedQaModule:
    if doc.get("schema") != "krlab/1":
        raise ValueError("unknown document schema")
    slices = {}
    for s in doc["slices"]:
        slices[(s["eps"], s["i"], s["x"])] = SliceModule(
            tuple(s["free"]), tuple((l, t) for l, t in s["torsion"])
        )
    tails = tuple(
        Tail(t["eps"], t["i"], t["start"],
             tuple((l, s, tuple(c)) for l, s, c in t["families"]))
        for t in doc["tail"]
    )
    return GradedQaModule(doc["n"], tuple(doc["window"]), slices, tails)


def _skein_json(v: SkeinValue, n: int, alpha_max: int, xi_max: int) -> dict:
    series = [
        [a, x, str(c1), str(ct)]
        for (a, x), (c1, ct) in sorted(series_expand(v, alpha_max, xi_max).items())
    ]
    return {
        "schema": "krlab/1",
        "n": n,
        "value": {"tau=+1": v.plus.pretty(), "tau=-1": v.minus.pretty()},
        "series": series,
    }


def _print_skein(v: SkeinValue, alpha_max: int, xi_max: int) -> None:
    click.echo(v.pretty())
    click.echo(f"series through alpha^{alpha_max}, xi^{xi_max} (1, tau parts):")
    for (a, x), (c1, ct) in sorted(series_expand(v, alpha_max, xi_max).items()):
        click.echo(f"  alpha^{a} xi^{x}: {c1} + {ct} tau")


@click.group()
def main() -> None:
    """Transverse link homology and its skein-recursion shadow."""


@main.command()
@click.option("--braid", "braid_text", required=True, help="word, e.g. '1 -2 1' or 's1 s2^-1'")
@click.option("--strands", type=int, default=None, help="strand count (default: least possible)")
@click.option("--n", "n", type=int, default=1, show_default=True)
@click.option("--xwindow", type=int, default=20, show_default=True, help="x-degree window width")
@click.option("--format", "fmt", type=click.Choice(["table", "json"]), default="table")
def homology(braid_text, strands, n, xwindow, fmt):
    """Two-stage homology of a closed braid, as slices plus tails."""
    _check_n(n)
    word = _braid(braid_text, strands)
    mod = _homology(word, n, xwindow)
    doc = json.dumps(module_json(mod))
    if fmt == "table":
        click.echo(mod.pretty())
        click.echo(doc)
    else:
        click.echo(doc)


@main.command()
@click.option("--braid", "braid_text", required=True)
@click.option("--strands", type=int, default=None)
@click.option("--n", "n", type=int, default=1, show_default=True)
@click.option("--alpha-max", type=int, default=12, show_default=True)
@click.option("--xi-max", type=int, default=12, show_default=True)
@click.option("--budget", type=int, default=10**4, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["table", "json"]), default="table")
def skein(braid_text, strands, n, alpha_max, xi_max, budget, fmt):
    """Skein-recursion value of a closed braid, exact plus truncated series."""
    _check_n(n)
    word = _braid(braid_text, strands)
    value = _skein(word, n, budget)
    if fmt == "table":
        _print_skein(value, alpha_max, xi_max)
    else:
        click.echo(json.dumps(_skein_json(value, n, alpha_max, xi_max)))


@main.command()
@click.option("--braid", "braid_text", required=True)
@click.option("--strands", type=int, default=None)
@click.option("--n", "n", type=int, default=1, show_default=True)
@click.option("--xwindow", type=int, default=20, show_default=True)
@click.option("--alpha-max", type=int, default=12, show_default=True)
@click.option("--xi-max", type=int, default=12, show_default=True)
@click.option("--budget", type=int, default=10**4, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["table", "json"]), default="table")
def both(braid_text, strands, n, xwindow, alpha_max, xi_max, budget, fmt):
    """Run both pipelines and report whether they agree."""
    _check_n(n)
    word = _braid(braid_text, strands)
    mod = _homology(word, n, xwindow)
    value = _skein(word, n, budget)
    try:
        euler = euler_characteristic(mod)
    except ValueError as exc:
        _fail(1, str(exc))
    verdict = "MATCH" if euler == value else "MISMATCH"
    if fmt == "table":
        click.echo(mod.pretty())
        click.echo(json.dumps(module_json(mod)))
        _print_skein(value, alpha_max, xi_max)
        click.echo(f"cross-check: {verdict}")
    else:
        doc = module_json(mod)
        doc["skein"] = _skein_json(value, n, alpha_max, xi_max)
        doc["cross_check"] = verdict
        click.echo(json.dumps(doc))
    if verdict != "MATCH":
        sys.exit(3)


@main.command()
@click.option("--graph", "graph_spec", required=True,
              help="builtin graph name or description file")
@click.option("--n", "n", type=int, default=1, show_default=True)
@click.option("--xwindow", type=int, default=20, show_default=True, help="x-degree truncation")
@click.option("--format", "fmt", type=click.Choice(["table", "json"]), default="table")
def gdim(graph_spec, n, xwindow, fmt):
    """Graded dimension series of a trivalent graph's factorization."""
    _check_n(n)
    if graph_spec in builtin_graph_names():
        graph = builtin_graph(graph_spec)
    else:
        path = Path(graph_spec)
        if not path.exists():
            _fail(1, f"no builtin graph or file named {graph_spec!r}")
        try:
            graph = parse_graph(path.read_text())
        except ValueError as exc:
            _fail(1, f"graph parse error: {exc}")
    series = graph_gdim(graph, n, xwindow)
    if fmt == "table":
        click.echo(series.pretty())
    else:
        terms = [[e, j, k, v] for (e, j, k), v in sorted(series.terms.items())]
        click.echo(json.dumps({
            "schema": "krlab/1",
            "n": n,
            "x_truncation": series.x_truncation,
            "terms": terms,
        }))


def _verify_checks(n: int, xwindow: int, budget: int):
    def unknot_table():
        mod = _homology(parse("", 1), n, xwindow)
        lo, hi = mod.window
        expect = {(1, 0, -n + 1 + 2 * l): SliceModule((-1,), ()) for l in range(n)}
        k = n + 1
        while k <= hi:
            expect[(1, 0, k)] = SliceModule((), ((1, -1),))
            k += 2
        ok = mod.slices == expect and mod.tails == (Tail(1, 0, n + 1, ((1, -1, (1,)),)),)
        return ok, "unknot decomposition differs from the closed form"

    def circle_gdim():
        series = graph_gdim(builtin_graph("circle"), n, 8)
        ok = series.terms == {(0, 0, 0): 1, (1, -1, 1 - n): 1}
        return ok, "circle graded dimension differs from 1 + tau alpha^-1 xi^(1-n)"

    def edge_splitting():
        wide = graph_gdim(builtin_graph("wide-edge"), n, 12)
        split = graph_gdim(builtin_graph("theta-split"), n, 12)
        total = wide.shifted(0, 0, 1) + wide.shifted(0, 0, -1)
        bound = min(total.x_truncation, split.x_truncation)
        ok = split.truncated(bound).terms == total.truncated(bound).terms
        return ok, "splitting a wide edge is not multiplication by xi + xi^-1"

    def unlink_values():
        for m in (1, 2):
            if evaluate(parse("", m), n, budget) != unlink_value(m, n):
                return False, f"the {m}-component unlink misses its closed form"
        return True, ""

    def residuals():
        for text, strands, pos in [("1 1", 2, 1), ("1 -2", 3, 2), ("2 1 2", 3, 3)]:
            if not skein_residual(parse(text, strands), pos, n, budget).is_zero:
                return False, f"skein relation leaves a residual on {text!r}"
        return True, ""

    def euler_cross_check():
        for text, strands in [("", 1), ("1", 2), ("-1", 2)]:
            mod = _homology(parse(text, strands), n, xwindow)
            if euler_characteristic(mod) != evaluate(parse(text, strands), n, budget):
                return False, f"euler characteristic disagrees with the skein value on {text!r}"
        return True, ""

    return [
        ("unknot homology table", unknot_table),
        ("circle graded dimension", circle_gdim),
        ("edge splitting", edge_splitting),
        ("unlink skein values", unlink_values),
        ("skein residuals", residuals),
        ("euler cross-check", euler_cross_check),
    ]


@main.command()
@click.option("--n", "n", type=int, default=1, show_default=True)
@click.option("--xwindow", type=int, default=20, show_default=True)
@click.option("--budget", type=int, default=10**4, show_default=True)
def verify(n, xwindow, budget):
    """Run the built-in consistency sweep and report one line per check."""
    _check_n(n)
    failures = 0
    for name, check in _verify_checks(n, xwindow, budget):
        try:
            ok, detail = check()
        except SkeinBudgetError as exc:
            _fail(2, str(exc))
        if ok:
            click.echo(f"ok   {name}")
        else:
            failures += 1
            click.echo(f"FAIL {name}: {detail}")
    if failures:
        sys.exit(3)


if __name__ == "__main__":
    main()
