"""Command-line scenario runner.

    w1plus run scenario.json [--tol T] [--grid N] [--out PATH]
    w1plus selftest [--seed N]

Exit status: 0 when every requested check passes, 1 when a check fails,
2 for malformed input and 3 when the boundary solver does not converge.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import binomial_w2 as bw
from .bbtriple import (
    BBTriple,
    check_I_bound,
    functional_I,
    functional_I_ibp,
    random_bb_triple,
    validate,
)
from .entropy import Potential, PotentialError, entropy_along_curve, holder_gap, psi, relative_entropy_bound
from .geodesic import (
    ConvergenceError,
    GeodesicError,
    binomial_pmf,
    check_w1_geodesic,
    continuity_residuals,
    eval_triple,
    solve_canonical,
    write_curve_csv,
)
from .graphs import Graph, GraphError, build_graph, path_graph
from .orientation import dump_orientation, m_weight, orient, path_counts
from .products import ProductError, tensorization_check
from .transport import Measure, read_measure

EXIT_OK, EXIT_FAIL, EXIT_PARSE, EXIT_NOCONV = 0, 1, 2, 3
MODES = ("orient", "geodesic", "entropy", "tensor", "binomial-w2", "bbtest")

DEFAULTS = {
    "solver": 1e-10,
    "fd_agreement": 1e-4,
    "convexity": 1e-8,
    "w_squared_std": 1e-8,
    "continuity": 1e-9,
    "w1_geodesic": 1e-6,
    "identity": 1e-9,
    "bound": 1e-8,
}


class ScenarioError(ValueError):
    pass


@dataclass
class Outcome:
    checks: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def check(self, name: str, ok: bool, detail: str = "") -> None:
        self.checks.append((name, bool(ok), detail))

    @property
    def passed(self) -> bool:
        return all(ok for _, ok, _ in self.checks)

    def summary(self) -> str:
        lines = [f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  ({d})" if d else "")
                 for name, ok, d in self.checks]
        return "\n".join(self.notes + lines)


def _mass(v):
    if isinstance(v, str):
        return Fraction(v)
    if isinstance(v, (int, float)):
        return v
    raise ScenarioError(f"cannot read mass {v!r}")


def _vertex(g: Graph, key):
    if isinstance(key, (list, tuple)):
        return g.vertex(*[int(c) for c in key])
    return int(key)


def parse_measure(spec, g: Graph, base_dir: str = ".") -> Measure:
    """Inline atoms (``{"3": 0.5}`` or ``[[v, m], ...]``) or a measure file."""
    if isinstance(spec, str):
        path = spec[5:] if spec.startswith("file:") else spec
        return read_measure(os.path.join(base_dir, path))
    if isinstance(spec, dict) and "file" in spec:
        return read_measure(os.path.join(base_dir, spec["file"]))
    if isinstance(spec, dict):
        items = [(k, v) for k, v in spec.items()]
    elif isinstance(spec, list):
        items = [tuple(a) for a in spec]
    else:
        raise ScenarioError(f"cannot read measure {spec!r}")
    mass: dict[int, object] = {}
    for key, m in items:
        if isinstance(key, str):
            key = json.loads(key) if key.strip().startswith("[") else int(key)
        v = _vertex(g, key)
        if not 0 <= v < g.n:
            raise ScenarioError(f"vertex {key} outside the graph")
        mass[v] = mass.get(v, 0) + _mass(m)
    return Measure.normalized(mass, tol=1e-6)


def parse_grid(spec) -> np.ndarray:
    if spec is None:
        spec = 101
    if isinstance(spec, int):
        if spec < 2:
            raise ScenarioError("grid needs at least two points")
        return np.linspace(0.0, 1.0, spec)
    grid = np.array([float(t) for t in spec])
    if np.any((grid < 0) | (grid > 1)):
        raise ScenarioError("grid points must lie in [0, 1]")
    return grid


def parse_potential(spec, g: Graph) -> Potential:
    V = spec.get("V")
    if isinstance(V, list):
        V = {i: float(x) for i, x in enumerate(V)}
    elif isinstance(V, dict):
        V = {_vertex(g, json.loads(k) if str(k).startswith("[") else int(k)): float(x)
             for k, x in V.items()}
    elif V == "square":
        V = {v: float(v) ** 2 for v in g.vertices}
    elif V == "abs":
        V = {v: float(abs(v)) for v in g.vertices}
    else:
        raise ScenarioError("potential V must be a list, a mapping, 'square' or 'abs'")
    missing = [v for v in g.vertices if v not in V]
    if missing:
        raise ScenarioError(f"potential undefined at vertex {missing[0]}")
    return Potential(V, float(spec.get("K", 0.0)))


@dataclass
class Scenario:
    mode: str
    graph: Graph
    f0: Measure
    f1: Measure
    grid: np.ndarray
    renyi: tuple
    potential: Potential | None
    tol: dict
    out: str | None
    seed: int
    samples: int
    max_iter: int = 100_000


def load_scenario(path: str, tol: float | None = None, grid: int | None = None,
                  out: str | None = None) -> Scenario:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ScenarioError(f"cannot read scenario: {exc}") from None
    if not isinstance(doc, dict):
        raise ScenarioError("scenario must be a JSON object")
    base = os.path.dirname(os.path.abspath(path))
    mode = doc.get("mode")
    if mode not in MODES:
        raise ScenarioError(f"mode must be one of {', '.join(MODES)}")
    if "graph" not in doc and mode != "binomial-w2":
        raise ScenarioError("scenario needs a graph")
    gspec = doc.get("graph")
    if isinstance(gspec, str) and gspec.startswith("file:"):
        gspec = "file:" + os.path.join(base, gspec[5:])
    try:
        if gspec is not None:
            g = build_graph(gspec)
        else:
            g = None
        if mode == "binomial-w2":
            f0, f1 = _integer_measure(doc.get("f0")), _integer_measure(doc.get("f1"))
            g = g or path_graph(1)
        else:
            if "f0" not in doc or "f1" not in doc:
                raise ScenarioError("scenario needs f0 and f1")
            f0, f1 = parse_measure(doc["f0"], g, base), parse_measure(doc["f1"], g, base)
            for f in (f0, f1):
                if max(f.mass) >= g.n:
                    raise ScenarioError("measure support outside the graph")
        if mode == "tensor" and g.halves is None:
            raise ScenarioError("tensor mode needs a product graph with explicit factors")
        tols = dict(DEFAULTS)
        tols.update({k: float(v) for k, v in doc.get("tol", {}).items()})
        if tol is not None:
            tols["solver"] = tol
        pot = parse_potential(doc["potential"], g) if "potential" in doc else None
        return Scenario(
            mode=mode,
            graph=g,
            f0=f0,
            f1=f1,
            grid=parse_grid(grid if grid is not None else doc.get("grid")),
            renyi=tuple(float(p) for p in doc.get("renyi", ())),
            potential=pot,
            tol=tols,
            out=out or (os.path.join(base, doc["out"]) if "out" in doc else None),
            seed=int(doc.get("seed", 0)),
            samples=int(doc.get("samples", 100)),
            max_iter=int(doc.get("max_iter", 100_000)),
        )
    except ScenarioError:
        raise
    except (GraphError, ValueError, KeyError, TypeError, AttributeError) as exc:
        raise ScenarioError(str(exc)) from None


def _integer_measure(spec) -> Measure:
    if spec is None:
        raise ScenarioError("scenario needs f0 and f1")
    if isinstance(spec, dict):
        items = spec.items()
    else:
        items = [tuple(a) for a in spec]
    return Measure.normalized({int(k): _mass(v) for k, v in items}, tol=1e-6)


def _curve(sc: Scenario):
    o = orient(sc.graph, sc.f0, sc.f1)
    return solve_canonical(o, path_counts(o), sc.f0, sc.f1, tol=sc.tol["solver"],
                           max_iter=sc.max_iter)


def _write_rows(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def run_orient(sc: Scenario, res: Outcome) -> None:
    o = orient(sc.graph, sc.f0, sc.f1)
    res.check("orientation acyclic", o.is_acyclic())
    pc = path_counts(o)
    res.notes.append(dump_orientation(o, pc).rstrip())
    bad = [e for e in o.edges if not sc.graph.is_edge(*e)]
    res.check("oriented pairs are edges", not bad)
    if sc.out:
        rows = [[x, y, str(m_weight(pc, (x, y)))] for x, y in o.edges]
        _write_rows(sc.out, ["tail", "head", "m_weight"], rows)


def run_geodesic(sc: Scenario, res: Outcome) -> None:
    c = _curve(sc)
    rep = continuity_residuals(c)
    scale = max(1.0, float(np.abs(c.p.coeffs).max() * np.abs(c.q.monomial()).max() / c.eg) ** 2)
    res.check("mass, continuity and BB equations", rep.ok(sc.tol["continuity"] * scale),
              f"{rep}")
    coarse = sc.grid[:: max(1, len(sc.grid) // 10)]
    w1 = check_w1_geodesic(c, coarse, sc.tol["w1_geodesic"])
    res.check("W1 geodesic", w1.passed, f"max error {w1.max_error:.2e}")
    if sc.out:
        write_curve_csv(c, sc.grid, sc.out)


def run_entropy(sc: Scenario, res: Outcome) -> None:
    c = _curve(sc)
    rep = entropy_along_curve(c, sc.grid, sc.renyi)
    res.check("H'' >= 0", rep.min_Hpp >= -sc.tol["convexity"], f"min H'' {rep.min_Hpp:.6g}")
    res.check("analytic H'' matches finite differences", rep.fd_mismatch() <= sc.tol["fd_agreement"],
              f"max relative gap {rep.fd_mismatch():.2e}")
    w2 = rep.w_squared[np.isfinite(rep.w_squared)]
    if len(w2):
        res.check("W^2 constant in t", float(np.std(w2)) < sc.tol["w_squared_std"],
                  f"W^2 = {w2.mean():.10g}")
    inner = np.isfinite(rep.Hpp_analytic)
    slack = sc.tol["bound"] * np.maximum(1.0, np.abs(rep.Hpp_analytic[inner]))
    res.check("I >= general lower bound",
              bool(np.all(rep.Hpp_analytic[inner] >= rep.lower_bound[inner] - slack)))
    for p, d2 in sorted(rep.renyi_second_diff.items()):
        res.check(f"Renyi H_{p} convex", float(d2.min(initial=np.inf)) >= -1e-6,
                  f"min second difference {float(d2.min(initial=np.inf)):.3g}")
    if sc.potential is not None:
        try:
            rb = relative_entropy_bound(c, sc.potential, sc.grid)
        except PotentialError as exc:
            res.check("potential K-convex on oriented triples", False, str(exc))
        else:
            res.check("relative entropy bound", rb.satisfied, f"min margin {rb.margin.min(initial=np.inf):.3g}")
    if sc.out:
        rep.write_csv(sc.out)


def run_tensor(sc: Scenario, res: Outcome) -> None:
    c = _curve(sc)
    try:
        rep = tensorization_check(c, sc.grid)
    except ProductError as exc:
        res.check("canonical curve", False, str(exc))
        return
    res.check("H'' >= slice sums", rep.all_satisfied, f"min margin {rep.margin():.3g}")
    if sc.out:
        rep.write_csv(sc.out)


def run_binomial(sc: Scenario, res: Outcome) -> None:
    rep = bw.entropy_convexity_report(sc.f0, sc.f1, sc.grid)
    res.notes.append("theorem applies" if rep.theorem_applies else "theorem does not apply")
    res.notes.append(f"domination: {rep.domination}, log-concave on grid: {bool(rep.log_concave.all())}")
    if rep.theorem_applies:
        res.check("entropy convex", rep.convex, f"min FD2 H {rep.min_Hpp_fd:.4g}")
        hle = rep.h_le_htilde[np.isfinite(rep.h_le_htilde)]
        res.check("h <= h~", bool(np.all(hle == 1.0)))
    if sc.out:
        rep.write_csv(sc.out)


def run_bbtest(sc: Scenario, res: Outcome) -> None:
    o = orient(sc.graph, sc.f0, sc.f1)
    rng = np.random.default_rng(sc.seed)
    rows = []
    worst = 0.0
    bound_ok = True
    for k in range(sc.samples):
        tr = random_bb_triple(o, rng)
        a, b = functional_I(tr), functional_I_ibp(tr)
        br = check_I_bound(tr, sc.tol["bound"])
        worst = max(worst, abs(a - b) / max(1.0, abs(a)))
        bound_ok &= br.satisfied
        rows.append([k, repr(a), repr(b), repr(br.bound)])
    res.check("I equals its integrated-by-parts form", worst <= sc.tol["identity"], f"{worst:.2e}")
    res.check("I >= general lower bound", bound_ok)
    if sc.out:
        _write_rows(sc.out, ["sample", "I", "I_ibp", "lower_bound_general"], rows)


RUNNERS = {
    "orient": run_orient,
    "geodesic": run_geodesic,
    "entropy": run_entropy,
    "tensor": run_tensor,
    "binomial-w2": run_binomial,
    "bbtest": run_bbtest,
}


def cmd_run(args) -> int:
    try:
        sc = load_scenario(args.scenario, args.tol, args.grid, args.out)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    res = Outcome()
    try:
        RUNNERS[sc.mode](sc, res)
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOCONV
    except GeodesicError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOCONV
    where = "" if sc.mode == "binomial-w2" else f" on {sc.graph.name}"
    print(f"mode {sc.mode}{where}")
    print(res.summary())
    return EXIT_OK if res.passed else EXIT_FAIL


# --- selftest ---------------------------------------------------------------


def _suite_bbtriple(rng, res: Outcome) -> None:
    from .graphs import hypercube

    worst = 0.0
    bound = True
    cases = [(path_graph(6), Measure.dirac(0), Measure.dirac(5)),
             (hypercube(3), Measure.dirac(0), Measure.dirac(7))]
    for g, f0, f1 in cases:
        o = orient(g, f0, f1)
        for _ in range(200):
            tr = random_bb_triple(o, rng)
            a, b = functional_I(tr), functional_I_ibp(tr)
            worst = max(worst, abs(a - b) / max(1.0, abs(a)))
            bound &= check_I_bound(tr).satisfied
    res.check("BB-triples: I matches integrated form", worst <= 1e-9, f"max gap {worst:.2e}")
    res.check("BB-triples: I >= general bound", bound)


def _suite_lemmas(rng, res: Outcome) -> None:
    xs = np.arange(0, 10 + 1e-9, 1e-3)
    mins = [float(psi(xs, p).min()) for p in np.round(np.arange(0.1, 1.0, 0.1), 1)]
    res.check("psi >= 0 on grid", min(mins) >= -1e-12, f"min psi {min(mins):.3e}")
    n = 100_000
    f = rng.uniform(1e-3, 10, n)
    g = rng.uniform(1e-3, 10, n)
    h = rng.uniform(0, 10, n)
    p = rng.uniform(0.01, 0.99, n)
    gap = holder_gap(f, g, h, p)
    res.check("Holder gap >= 0 on random samples", gap.min() >= -1e-12, f"min gap {gap.min():.3e}")


def _suite_binomial(rng, res: Outcome) -> None:
    worst = 0.0
    for n in range(1, 9):
        g = path_graph(n + 1)
        c = solve_canonical(*_oriented(g, Measure.dirac(0), Measure.dirac(n)))
        for t in np.linspace(0, 1, 21):
            worst = max(worst, float(np.abs(c.f(t) - binomial_pmf(n, t)).max()))
    res.check("canonical chain geodesic is binomial", worst <= 1e-10, f"max error {worst:.2e}")


def _oriented(g, f0, f1):
    o = orient(g, f0, f1)
    return o, path_counts(o), f0, f1


def _suite_fault(res: Outcome, inject: bool) -> None:
    from .graphs import hypercube

    g = hypercube(2)
    f0, f1 = Measure.dirac(0), Measure.dirac(3)
    c = solve_canonical(*_oriented(g, f0, f1))
    tr = eval_triple(c, 0.3)
    if inject:
        # scale the m-weight of one oriented triple
        h = tr.h.copy()
        h[0] *= 1.5
        tr = BBTriple(tr.orientation, tr.f, tr.g, h)
    rep = validate(tr)
    res.check("canonical triple satisfies BB equation", rep.valid,
              "" if rep.valid else f"BB equation violated: {rep}")


def cmd_selftest(args) -> int:
    rng = np.random.default_rng(args.seed)
    res = Outcome()
    try:
        _suite_bbtriple(rng, res)
        _suite_lemmas(rng, res)
        _suite_binomial(rng, res)
        _suite_fault(res, args.inject_fault)
    except (ConvergenceError, GeodesicError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOCONV
    print(res.summary())
    for name, ok, detail in res.checks:
        if not ok and "BB equation violated" in detail:
            print("BB equation violated", file=sys.stderr)
    if args.out:
        _write_rows(args.out, ["check", "passed", "detail"],
                    [[n, int(ok), d] for n, ok, d in res.checks])
    return EXIT_OK if res.passed else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="w1plus", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a JSON scenario")
    r.add_argument("scenario")
    r.add_argument("--tol", type=float, default=None, help="boundary solver tolerance (1e-10)")
    r.add_argument("--grid", type=int, default=None, help="number of t-grid points (101)")
    r.add_argument("--out", default=None, help="CSV output path")
    r.set_defaults(func=cmd_run)
    s = sub.add_parser("selftest", help="run the bundled invariant suites")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", default=None, help="CSV summary path")
    s.add_argument("--tol", type=float, default=None, help=argparse.SUPPRESS)
    s.add_argument("--grid", type=int, default=None, help=argparse.SUPPRESS)
    s.add_argument("--inject-fault", action="store_true",
                   help="corrupt one m-weight as a negative control")
    s.set_defaults(func=cmd_selftest)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else EXIT_OK
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
