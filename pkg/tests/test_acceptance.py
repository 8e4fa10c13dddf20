"""Acceptance criteria 1-12.

Each test records a one-line PASS/FAIL verdict; the lines are printed at the
end of the pytest run and also when this file is executed directly.
"""
from __future__ import annotations

import io
import itertools
import math
import os
import random
import sys
import time
from fractions import Fraction
from pathlib import Path

import mpmath
import numpy as np

sys.path.insert(0, str(Path(__file__).parent))

from conftest import DATA, circle_model  # noqa: E402
from test_cubical import circle_extension_oracle  # noqa: E402
from systolekit.chains import (  # noqa: E402
    CubicalChain,
    boundary_matrix,
    filling_lp,
    isoperimetric_constants,
    regularity_constant_A,
)
from systolekit.cli import run  # noqa: E402
from systolekit.cubical import (  # noqa: E402
    CubeCell,
    CubeComplex,
    ExtensionParams,
    PeriodicLineModel,
    build_extension,
    embed,
    embed_all,
    face_separation_check,
    image_cycle,
    lipschitz_report,
    random_subcomplex,
    retract_complex,
)
from systolekit.errors import Infeasible  # noqa: E402
from systolekit.homotopy import systole_search, torus_homomorphism  # noqa: E402
from systolekit.mesh import flat_torus_mesh  # noqa: E402
from systolekit.metric import build_geodesic_graph, sample_pairs  # noqa: E402
from systolekit.regularity import (  # noqa: E402
    coarea_check,
    growth_lemma_check,
    growth_lower_bound,
    maximal_packing,
    nerve_count_bound_check,
    nerve_of_cover,
    systole_monotonicity_check,
)

Q = Fraction
RESULTS: dict = {}


def record(number: int, ok: bool, detail: str) -> None:
    RESULTS[number] = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'} - {detail}"
    assert ok, RESULTS[number]


def fig_models():
    fig2 = circle_model(1, 4, 60)
    fig3 = circle_model(2, 3, 80)
    return (fig2, [1, 2, 3], Q(1, 4)), (fig3, [0, 1, 2], Q(1, 3))


# 1 ---------------------------------------------------------------------------

def test_criterion_01_figures():
    start = time.perf_counter()
    (fig2, net2, e2), (fig3, net3, e3) = fig_models()
    V, g, G, _ = fig2
    ext2 = build_extension(V, g, G, net2, ExtensionParams(e2))
    ok2 = ext2.complex.dim == 2 and ext2.coordinate_faces and ext2.complex.in_coordinate_faces()
    V, g, G, _ = fig3
    P = ExtensionParams(e3)
    ext3 = build_extension(V, g, G, net3, P)
    edges = [c for c in ext3.complex.cells if c.dim == 1]
    degree = {}
    for e in edges:
        for f in e.faces():
            if f.dim == 0:
                degree[f] = degree.get(f, 0) + 1
    ok3 = ext3.census == {0: 6, 1: 6} and set(degree.values()) == {2}
    far = next(v for v in range(G.n_nodes) if G.distances(0)[v] == 1)
    third = next(v for v in range(G.n_nodes)
                 if G.distances(0)[v] == Q(1, 3) and G.distances(1)[v] == Q(1, 3))
    V1, g1, G1, _ = fig2
    images = [embed(G, net3, 0, P), embed(G, net3, third, P), embed(G, net3, far, P),
              embed(G1, net2, G1.node_of_vertex(1), ExtensionParams(e2))]
    ok_j = images == [(0, 1, 1), (0, 0, 1), (1, 0, 0), (0, 0, Q(1, 2))] and \
        all(isinstance(x, (int, Fraction)) for p in images for x in p)
    ok_oracle = ext3.complex == circle_extension_oracle(2, [0, Q(2, 3), Q(4, 3)], e3, Q(1, 120)) and \
        ext2.complex == circle_extension_oracle(1, [Q(1, 4), Q(1, 2), Q(3, 4)], e2, Q(1, 240))
    elapsed = time.perf_counter() - start
    record(1, ok2 and ok3 and ok_j and ok_oracle and elapsed < 5,
           f"Fig.2 census {ext2.census}, Fig.3 census {ext3.census}, J images exact={ok_j}, oracle match={ok_oracle}, {elapsed:.2f}s")


# 2 ---------------------------------------------------------------------------

def test_criterion_02_lipschitz():
    details, ok = [], True
    for (V, g, G, _), net, eps in fig_models():
        P = ExtensionParams(eps)
        pairs = sample_pairs(G.n_nodes, 10_000, seed=1)
        rep = lipschitz_report(G, embed_all(G, net, P), P.lipschitz, pairs, tol=1e-9)
        ok = ok and rep.pairs_checked == 10_000 and not rep.violations
        details.append(f"{rep.pairs_checked} pairs, max ratio {float(rep.max_ratio):.4f} <= {float(P.lipschitz):.4f}")
    record(2, ok, "; ".join(details))


# 3 ---------------------------------------------------------------------------

def _in_complex(K, p):
    return any(all(s == "*" or Q(int(s)) == x for s, x in zip(c.spec, p)) for c in K.cells)


def _sup_dist_to_cell(p, cell):
    return max((abs(x - Q(int(s))) for s, x in zip(cell.spec, p) if s != "*"), default=Q(0))


def test_criterion_03_retraction():
    rng = random.Random(2025)
    violations = checked = 0
    for _ in range(100):
        N = rng.randint(1, 6)
        K = random_subcomplex(N, rng, n_cells=rng.randint(1, 4))
        eps = Q(rng.randint(1, 19), 40)
        cells = sorted(K.cells, key=str)
        pts = []
        while len(pts) < 40:
            c = rng.choice(cells)
            p = tuple(Q(rng.randint(0, 80), 80) if s == "*" else
                      min(Q(1), max(Q(0), Q(int(s)) + Q(rng.randint(-20, 20), 80))) for s in c.spec)
            if min(_sup_dist_to_cell(p, cell) for cell in K.cells) <= eps:
                pts.append(p)
        for p in pts:
            checked += 1
            violations += not _in_complex(K, retract_complex(p, eps))
    record(3, violations == 0, f"100 subcomplexes, {checked} tube points, {violations} violations")


# 4 ---------------------------------------------------------------------------

def test_criterion_04_torus_systoles():
    start = time.perf_counter()
    sides = [Q(1), Q(3, 2), Q(2)]
    ok, worst = True, 0.0
    for a, b in itertools.product(sides, repeat=2):
        V, g = flat_torus_mesh(a, b, 3)
        G = build_geodesic_graph(V, g, 4)
        res = systole_search(G, torus_homomorphism(V, 3))
        lengths = {(p, q): math.hypot(p * a, q * b) for p, q in itertools.product(range(-3, 4), repeat=2)
                   if (p, q) != (0, 0)}
        truth = min(lengths.values())
        minimizers = {k for k, v in lengths.items() if math.isclose(v, truth)}
        value = float(res.value)
        ok = ok and truth - 1e-9 <= value <= truth + float(G.mesh_size) and tuple(res.element) in minimizers
        worst = max(worst, abs(value - truth))
    elapsed = time.perf_counter() - start
    record(4, ok and elapsed < 30, f"9 tori at k=4, max |sys - lattice| = {worst:.2e}, minimizers match, {elapsed:.1f}s")


# 5 ---------------------------------------------------------------------------

def test_criterion_05_monotonicity():
    out, ok = [], True
    for (V, g, G, phi), net, eps in fig_models():
        V2, g2, phi2 = image_cycle(G, net, ExtensionParams(eps), phi)
        rep = systole_monotonicity_check((V, g, phi), (V2, g2, phi2))
        ok = ok and rep.holds
        out.append(f"{rep.derived_systole} >= {rep.base_systole}")
    ok = ok and out[1] == "6 >= 2"
    record(5, ok, "; ".join(out))


# 6 ---------------------------------------------------------------------------

def test_criterion_06_face_separation():
    model = PeriodicLineModel()
    reps = [face_separation_check(model, m) for m in (1, 2, 3)]
    ok = all(not r.violations and r.pairs_checked > 0 and r.min_separation >= r.m for r in reps)
    record(6, ok, ", ".join(f"m={r.m}: {r.pairs_checked} pairs, min {r.min_separation}" for r in reps))


# 7 ---------------------------------------------------------------------------

def _mp(x):
    x = Fraction(x)
    return mpmath.mpf(x.numerator) / x.denominator


def test_criterion_07_constants():
    worst, ok = mpmath.mpf(0), True
    with mpmath.workdps(50):
        for n, C in itertools.product(range(1, 6), [Q(1, 2), Q(1), Q(2)]):
            c = isoperimetric_constants(n, C)
            alpha = 1 / (mpmath.mpf(4) ** n * mpmath.mpf(n + 1) ** n * _mp(C) ** n)
            beta = _mp(C) * (mpmath.mpf(2) ** (n + 1) + (n + 1) * (1 + mpmath.mpf(2) ** n))
            worst = max(worst, abs(_mp(c.alpha_n) - alpha) / alpha, abs(_mp(c.beta_n) - beta) / beta)
            if n >= 2:
                r = regularity_constant_A(n, C, C)
                ap = 1 / (mpmath.mpf(4) ** (n - 1) * mpmath.mpf(n) ** (n - 1) * _mp(C) ** (n - 1))
                bp = _mp(C) * (mpmath.mpf(2) ** n + n * (1 + mpmath.mpf(2) ** (n - 1)))

                def slacks(A):
                    return (ap - n * A, alpha - A - bp * (n * A) ** (mpmath.mpf(n) / (n - 1)), alpha / 2 - A,
                            1 / (bp ** (n - 1) * mpmath.mpf(n) ** n) - A)

                s = slacks(_mp(r.A))
                ok = ok and min(s[:3]) >= -mpmath.mpf("1e-30") and s[3] > 0
                up = slacks(_mp(r.A) * (1 + mpmath.mpf("1e-9")))
                ok = ok and (min(up[:3]) < 0 or up[3] <= 0)
    ok = ok and worst <= 1e-12
    record(7, ok, f"n=1..5, C in {{1/2,1,2}}: max relative error {float(worst):.1e}; A feasible and maximal")


# 8 ---------------------------------------------------------------------------

def _oracle_boundary(spec):
    out = {}
    free = [i for i, s in enumerate(spec) if s == "*"]
    for j, i in enumerate(free):
        for value, sign in (("1", 1), ("0", -1)):
            face = list(spec)
            face[i] = value
            out[tuple(face)] = out.get(tuple(face), 0) + (-1) ** j * sign
    return out


def _squares(N):
    for free in itertools.combinations(range(N), 2):
        for fixed in itertools.product("01", repeat=N - 2):
            it = iter(fixed)
            yield tuple("*" if i in free else next(it) for i in range(N))


def test_criterion_08_filling_lp():
    rng = random.Random(8)
    feasible = infeasible = mismatches = 0
    for _ in range(60):
        N = rng.choice([3, 4])
        squares = list(_squares(N))
        chosen = rng.sample(squares, rng.randint(1, min(12, len(squares))))
        extra = rng.choice(squares)
        K = CubeComplex.closure(N, [CubeCell(s) for s in chosen] + [CubeCell(f) for f in _oracle_boundary(extra)])
        if rng.random() < 0.5:
            coeffs = {}
            for s in chosen:
                v = rng.choice([-1, 0, 1])
                for f, w in _oracle_boundary(s).items():
                    coeffs[f] = coeffs.get(f, 0) + v * w
        else:
            coeffs = _oracle_boundary(extra)
        z = CubicalChain(K, 1, {CubeCell(f): v for f, v in coeffs.items() if v})
        rows, cols, B = boundary_matrix(K, 1)
        zvec = np.array([z.coefficients.get(r, 0) for r in rows], dtype=np.int64)
        box = range(-2, 3) if len(cols) <= 8 else range(-1, 2)
        X = np.array(list(itertools.product(box, repeat=len(cols))), dtype=np.int64)
        hit = np.all(X @ B.T == zvec, axis=1)
        oracle = int(np.abs(X[hit]).sum(axis=1).min()) if hit.any() else None
        Bf = B.astype(float)
        by_rank = np.linalg.matrix_rank(np.column_stack([Bf, zvec])) == np.linalg.matrix_rank(Bf)
        try:
            res = filling_lp(z, K)
        except Infeasible:
            infeasible += 1
            mismatches += bool(by_rank) or oracle is not None
            continue
        mismatches += not by_rank
        if oracle is not None:
            feasible += 1
            mismatches += not math.isclose(float(res.volume), oracle, abs_tol=1e-7)
    record(8, mismatches == 0 and feasible > 0 and infeasible > 0,
           f"{feasible} LP = integer oracle, {infeasible} Infeasible matching rank, {mismatches} mismatches")


# 9 ---------------------------------------------------------------------------

def test_criterion_09_coarea():
    V, g = flat_torus_mesh(1, 1, 6)
    G = build_geodesic_graph(V, g, 5)
    radii = [i / 40 for i in range(0, 29)]
    rep = coarea_check(V, g, G, 0, radii=radii)
    inequality = rep.verdict
    equality = all(abs(vol - integ) <= tol and abs(integ - math.pi * r * r) <= tol
                   for r, vol, integ, tol in zip(rep.radii, rep.ball_volumes, rep.integrals, rep.tolerances)
                   if 0 < r <= 0.3)
    record(9, inequality and equality,
           f"{len(radii)} radii up to {radii[-1]}: inequality {'holds' if inequality else 'fails'}, "
           f"disk-law equality for r <= 0.3 {'holds' if equality else 'fails'}")


# 10 --------------------------------------------------------------------------

def _family(rng):
    """(a, v, alpha, beta, c, n) satisfying H1 and H2."""
    n = rng.randint(1, 4)
    alpha = rng.uniform(0, 1)
    beta = alpha + rng.uniform(0.5, 3)
    if n == 1:
        s, k = rng.uniform(0, 2), rng.uniform(1, 2)
        return (lambda t: 1 + s * (t - alpha), lambda t: k * ((t - alpha) + s * (t - alpha) ** 2 / 2),
                alpha, beta, rng.uniform(0.1, 5), 1)
    p = rng.uniform(1, n)
    k, lam = rng.uniform(0.2, 3), rng.uniform(0.5, 1)
    a = (lambda t: lam * k * p * max(t - alpha, 0) ** (p - 1))
    v = (lambda t: k * max(t - alpha, 0) ** p)
    grid = np.linspace(alpha, beta, 100)[1:]
    c = max(v(t) / a(t) ** (n / (n - 1)) for t in grid) * 1.01
    return a, v, alpha, beta, c, n


def test_criterion_10_growth_lemma():
    rng = random.Random(10)
    held = 0
    for _ in range(50):
        a, v, alpha, beta, c, n = _family(rng)
        rep = growth_lemma_check(a, v, alpha, beta, c, n, points=100)
        held += rep.hypotheses_hold and rep.conclusion_holds and not rep.hard_error
    corrupted = growth_lemma_check(lambda t: 2 * t, lambda t: 0.5 * growth_lower_bound(0, 1, 2, t), 0, 2, 1, 2)
    record(10, held == 50 and corrupted.flagged,
           f"{held}/50 families: hypotheses and conclusion hold; corrupted v flagged={corrupted.flagged}")


# 11 --------------------------------------------------------------------------

def test_criterion_11_nerve():
    V, g, G, _ = circle_model(2, 3, 4)
    centers = maximal_packing(G, Q(1, 2))
    nerve = nerve_of_cover(centers, Q(1, 2), G)
    bound = nerve_count_bound_check(nerve, 2, 1, Q(1, 2))
    counts = nerve.counts
    record(11, counts[0] == 2 and counts[1] == 1 and bound.verdict,
           f"N_0={counts[0]}, N_1={counts[1]}, N_0 <= {bound.bound}: {bound.verdict}")


# 12 --------------------------------------------------------------------------

def _commands(tmp: Path):
    d = DATA
    return {
        "validate": ["--mesh", d / "circle2.json"],
        "volume": ["--mesh", d / "torus3.json"],
        "systole": ["--mesh", d / "torus3.json", "--phi", d / "id-z2-torus3.json", "-k", "3"],
        "ratio": ["--mesh", d / "circle2.json", "--phi", d / "id-z.json"],
        "net": ["--mesh", d / "circle2.json", "--alpha", "1/3"],
        "extend": ["--mesh", d / "circle1.json", "--net", d / "net-fig2.json", "--eps", "1/4", "-k", "30"],
        "embed-report": ["--mesh", d / "circle2.json", "--net", d / "net3.json", "--eps", "1/3", "-k", "20"],
        "fill": ["--complex", d / "square.json", "--chain", d / "square-boundary.json"],
        "iso-check": ["--complex", d / "square.json", "--chain", d / "square-boundary.json", "--c1", "1/32"],
        "regularity": ["--mesh", d / "torus3.json", "--phi", d / "id-z2-torus3.json", "--eps", "1/10",
                       "--A", "1", "-k", "3", "--csv", tmp / "profile.csv"],
        "nerve": ["--mesh", d / "circle2.json", "--R0", "1/2", "--A", "1"],
        "hausdorff": ["--mesh", d / "circle2.json", "--set-a", "0,1", "--set-b", "2"],
        "constants": ["--n", "3", "--c1", "1", "--c2", "2", "--c3", "1/2"],
    }


def _artifacts(cmd, args, tmp: Path, workers: int) -> bytes:
    out_file = tmp / f"{cmd}.json"
    buf = io.StringIO()
    code = run([cmd, *map(str, args), "--workers", str(workers), "-o", str(out_file)], buf)
    blob = f"{code}\n{buf.getvalue()}".encode() + out_file.read_bytes()
    csv = tmp / "profile.csv"
    if csv.exists():
        blob += csv.read_bytes()
        csv.unlink()
    out_file.unlink()
    return blob


def test_criterion_12_determinism(tmp_path):
    most = max(2, os.cpu_count() or 1)
    differing, failed = [], []
    for cmd, args in _commands(tmp_path).items():
        runs = [_artifacts(cmd, args, tmp_path, w) for w in (1, 1, most, most)]
        if not runs[0].startswith(b"0\n"):
            failed.append(cmd)
        if len(set(runs)) != 1:
            differing.append(cmd)
    record(12, not differing and not failed,
           f"13 commands x workers 1 and {most}, twice each: {len(differing)} differ, {len(failed)} failed"
           + (f" ({', '.join(differing + failed)})" if differing or failed else ""))


if __name__ == "__main__":
    import tempfile

    tests = [(name, fn) for name, fn in sorted(globals().items()) if name.startswith("test_criterion_")]
    for name, fn in tests:
        try:
            if "tmp_path" in fn.__code__.co_varnames[:fn.__code__.co_argcount]:
                with tempfile.TemporaryDirectory() as tmp:
                    fn(Path(tmp))
            else:
                fn()
        except AssertionError:
            pass
    for n in sorted(RESULTS):
        print(RESULTS[n])
