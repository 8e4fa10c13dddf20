"""Checks for ball growth, coarea, regularity of cycles and nerve counts."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._numeric import is_exact, jsonable, normalize
from ._parallel import pmap
from .errors import (BadRange, DomainError, GridTooCoarse, Infeasible, MissingFilling,
                     NonpositiveInput)
from .metric import INF, BallGrowthProfile, GeodesicGraph, ball_volume_profile, dijkstra


def _pow(x, e: int):
    return normalize(Fraction(x) ** e) if is_exact(x) else x ** e


def growth_lower_bound(alpha, c, n: int, R):
    """``(R - alpha)^n / (c^{n-1} n^n)``."""
    if n < 1 or not c > 0 or not 0 <= alpha <= R:
        raise DomainError(f"need n >= 1, c > 0, 0 <= alpha <= R; got n={n}, c={c}, alpha={alpha}, R={R}")
    num = _pow(R - alpha, n)
    den = _pow(c, n - 1) * n ** n
    if is_exact(num) and is_exact(den):
        return normalize(Fraction(num) / Fraction(den))
    return num / den


# ----------------------------------------------------------------------------
# growth lemma


@dataclass(frozen=True)
class GrowthLemmaReport:
    grid: tuple
    h1: tuple  # per grid point
    h2: tuple
    conclusion: tuple
    lower_bounds: tuple
    quadrature_tol: tuple
    hard_error: bool  # hypotheses hold everywhere yet the conclusion fails

    @property
    def hypotheses_hold(self) -> bool:
        return all(self.h1) and all(self.h2)

    @property
    def conclusion_holds(self) -> bool:
        return all(self.conclusion)

    @property
    def flagged(self) -> bool:
        return not self.conclusion_holds

    @property
    def status(self) -> str:
        if self.hard_error:
            return "error: conclusion fails under the hypotheses"
        parts = []
        if not all(self.h1):
            parts.append(f"H1 fails at {self.h1.count(False)} points")
        if not all(self.h2):
            parts.append(f"H2 fails at {self.h2.count(False)} points")
        if not self.conclusion_holds:
            parts.append(f"conclusion fails at {self.conclusion.count(False)} points")
        return "; ".join(parts) or "hypotheses and conclusion hold"

    def to_dict(self) -> dict:
        return {"status": self.status, "hypotheses_hold": self.hypotheses_hold,
                "conclusion_holds": self.conclusion_holds, "hard_error": self.hard_error,
                "h1_failures": [jsonable(t) for t, ok in zip(self.grid, self.h1) if not ok],
                "h2_failures": [jsonable(t) for t, ok in zip(self.grid, self.h2) if not ok],
                "conclusion_failures": [jsonable(t) for t, ok in zip(self.grid, self.conclusion) if not ok]}


def _samples(f, grid):
    if callable(f):
        return np.array([float(f(t)) for t in grid])
    arr = np.asarray(f, dtype=float)
    if arr.shape != (len(grid),):
        raise GridTooCoarse("samples do not match the grid")
    return arr


def growth_lemma_check(a, v, alpha, beta, c, n: int, *, grid=None, points: int = 100,
                       rtol: float = 1e-9) -> GrowthLemmaReport:
    """Test the growth lemma on a grid over ``[alpha, beta]``.

    H1: ``v(R) >= integral_alpha^R a`` (trapezoid rule; the error allowance per
    cell is the curvature bound, widened to the trapezoid-midpoint gap when
    ``a`` is callable). H2: ``v(R) <= c a(R)^{n/(n-1)}``; for ``n = 1`` it reads
    ``a(R) >= 1``. Conclusion: ``v(R) >= growth_lower_bound(alpha, c, n, R)``.
    ``a`` and ``v`` are callables or samples on ``grid``.
    """
    grid = np.linspace(float(alpha), float(beta), points) if grid is None else np.asarray(grid, dtype=float)
    if len(grid) < 3:
        raise GridTooCoarse(f"need at least 3 samples, got {len(grid)}")
    A, Vv = _samples(a, grid), _samples(v, grid)
    h = np.diff(grid)
    integral = np.concatenate([[0.0], np.cumsum(h * (A[1:] + A[:-1]) / 2)])
    d2 = np.abs(np.gradient(np.gradient(A, grid, edge_order=2), grid, edge_order=2))
    cell = h ** 3 * np.maximum(d2[1:], d2[:-1]) / 12
    if callable(a):
        # |trapezoid - midpoint| bounds the error on cells where a is convex or
        # concave, including cells next to a singular a''
        mid = _samples(a, (grid[1:] + grid[:-1]) / 2)
        cell = np.maximum(cell, np.abs(h * ((A[1:] + A[:-1]) / 2 - mid)))
    err = np.concatenate([[0.0], np.cumsum(cell)])
    slack = rtol * np.maximum(1.0, np.abs(Vv))
    h1 = Vv >= integral - err - slack
    if n == 1:
        h2 = A >= 1 - slack
    else:
        h2 = Vv <= c * np.maximum(A, 0) ** (n / (n - 1)) + slack
    bounds = np.array([float(growth_lower_bound(float(alpha), c, n, max(float(alpha), t))) for t in grid])
    concl = Vv >= bounds - err - slack
    hard = bool(h1.all() and h2.all() and not concl.all())
    return GrowthLemmaReport(tuple(grid.tolist()), tuple(bool(x) for x in h1), tuple(bool(x) for x in h2),
                             tuple(bool(x) for x in concl), tuple(bounds.tolist()), tuple(err.tolist()), hard)


# ----------------------------------------------------------------------------
# coarea


@dataclass(frozen=True)
class CoareaSample:
    radii: tuple
    sphere_volumes: tuple
    ball_volumes: tuple
    integrals: tuple
    tolerances: tuple
    passes: tuple  # ball >= integral - tolerance per radius
    center: int = 0

    @property
    def verdict(self) -> bool:
        return all(self.passes)

    @property
    def warnings(self) -> tuple:
        """Radii where the inequality fails; isolated ones may be non-generic."""
        return tuple(r for r, ok in zip(self.radii, self.passes) if not ok)

    def to_dict(self) -> dict:
        return {"center": self.center, "verdict": "pass" if self.verdict else "fail",
                "radii": jsonable(list(self.radii)), "ball_volumes": jsonable(list(self.ball_volumes)),
                "sphere_volumes": jsonable(list(self.sphere_volumes)),
                "integrals": jsonable(list(self.integrals)), "tolerances": jsonable(list(self.tolerances)),
                "warnings": jsonable(list(self.warnings))}


def coarea_check(V, g, G: GeodesicGraph, center: int, radii=None, *, points: int = 25,
                 tol_factor: float = 3.0) -> CoareaSample:
    """Eilenberg's inequality ``vol B(r) >= integral_0^r vol S(t) dt`` for the distance to ``center``.

    Sphere volumes are central differences of the ball profile. The
    tolerance is ``tol_factor`` times the sum of the trapezoid error estimate
    (the gap between step ``h`` and ``2h`` rules) and the profile's own error
    bound, which the differenced sphere volumes inherit.
    """
    if radii is None:
        far = max(d for d in G.distances(center) if d != INF)
        radii = np.linspace(0.0, float(far), points).tolist()
    prof = ball_volume_profile(V, g, G, center, radii)
    r = np.array([float(x) for x in prof.radii])
    b = np.array([float(x) for x in prof.volumes])
    e = np.array([float(x) for x in prof.error_bounds])
    s = np.gradient(b, r) if len(r) > 2 else np.diff(b, prepend=0) / np.maximum(np.diff(r, prepend=r[0] - 1), 1e-300)
    s = np.maximum(s, 0.0)
    h = np.diff(r)
    integ = np.concatenate([[0.0], np.cumsum(h * (s[1:] + s[:-1]) / 2)])
    coarse = np.full_like(integ, np.nan)
    coarse[0::2] = np.concatenate([[0.0], np.cumsum((r[2::2] - r[:-2:2]) * (s[2::2] + s[:-2:2]) / 2)])
    rich = np.abs(integ - coarse)
    rich = np.where(np.isnan(rich), np.interp(r, r[0::2], np.nan_to_num(rich)[0::2]), rich)
    tol = tol_factor * (rich + e) + 1e-12
    passes = b >= integ - tol
    return CoareaSample(tuple(prof.radii), tuple(s.tolist()), tuple(prof.volumes), tuple(integ.tolist()),
                        tuple(tol.tolist()), tuple(bool(x) for x in passes), center)


# ----------------------------------------------------------------------------
# epsilon-regularity


@dataclass(frozen=True)
class RegularityReport:
    profiles: tuple
    A_n: object
    eps: object
    systole: object
    n: int
    verdicts: tuple  # ((center, R, volume, A R^n, ok), ...)
    shifted_a: object = None
    shifted_verdicts: tuple = ()  # ((center, R, volume, A (R-a)^n, ok), ...)

    @property
    def regular(self) -> bool:
        return all(v[-1] for v in self.verdicts)

    @property
    def shifted_regular(self) -> bool:
        return all(v[-1] for v in self.shifted_verdicts)

    def csv_rows(self) -> list:
        return [(R, vol, lb, "pass" if ok else "fail") for _, R, vol, lb, ok in self.verdicts]

    def to_dict(self) -> dict:
        doc = {"A_n": jsonable(self.A_n), "eps": jsonable(self.eps), "systole": jsonable(self.systole),
               "n": self.n, "verdict": "regular" if self.regular else "not regular",
               "checks": [{"center": c, "R": jsonable(R), "volume": jsonable(vol), "lower_bound": jsonable(lb),
                           "pass": ok} for c, R, vol, lb, ok in self.verdicts]}
        if self.shifted_a is not None:
            doc["shifted"] = {"a": jsonable(self.shifted_a),
                              "verdict": "pass" if self.shifted_regular else "fail",
                              "checks": [{"center": c, "R": jsonable(R), "volume": jsonable(vol),
                                          "lower_bound": jsonable(lb), "pass": ok}
                                         for c, R, vol, lb, ok in self.shifted_verdicts]}
        return doc


def _times(A, x):
    if is_exact(A) and is_exact(x):
        return normalize(Fraction(A) * Fraction(x))
    return float(A) * float(x)


def epsilon_regular_verdict(profiles, sys_, eps, A_n, *, n: int = 1, a=None) -> RegularityReport:
    """Check ``vol B(R) >= A_n R^n`` for every profile radius ``R`` in ``[eps, sys/2]``.

    With ``a`` also checks ``vol B(R) >= A_n (R - a)^n`` for ``R >= a``.
    """
    if sys_ == INF:
        raise BadRange("systole is infinite")
    half = normalize(Fraction(sys_) / 2) if is_exact(sys_) else sys_ / 2
    if not eps < half:
        raise BadRange(f"eps = {eps} must be below sys/2 = {half}")
    if isinstance(profiles, BallGrowthProfile):
        profiles = [profiles]
    profiles = sorted(profiles, key=lambda p: p.center)
    rows, shifted = [], []
    for p in profiles:
        for R, vol in zip(p.radii, p.volumes):
            if not eps <= R <= half:
                continue
            lb = _times(A_n, _pow(R, n))
            rows.append((p.center, R, vol, lb, vol >= lb))
            if a is not None and R >= a:
                lb2 = _times(A_n, _pow(R - a, n))
                shifted.append((p.center, R, vol, lb2, vol >= lb2))
    return RegularityReport(tuple(profiles), A_n, eps, sys_, n, tuple(rows), a, tuple(shifted))


# ----------------------------------------------------------------------------
# filling regularity


@dataclass(frozen=True)
class FillingBall:
    R: object
    ball: object  # CubicalChain
    boundary: object  # CubicalChain
    complex: object  # CubeComplex in which the boundary is filled


@dataclass(frozen=True)
class FillingRegularReport:
    eps: object
    checks: tuple  # ((R, ball volume, filling volume, ok), ...)
    derived_constant: object = None
    growth_checks: tuple = ()  # ((R, profile volume, C (R - eps)^n, ok), ...)

    @property
    def verdict(self) -> bool:
        return all(c[-1] for c in self.checks)

    def to_dict(self) -> dict:
        return {"eps": jsonable(self.eps), "verdict": "pass" if self.verdict else "fail",
                "checks": [{"R": jsonable(R), "ball_volume": jsonable(b), "filling_volume": jsonable(f),
                            "pass": ok} for R, b, f, ok in self.checks],
                "derived_constant": jsonable(self.derived_constant),
                "growth_checks": [{"R": jsonable(R), "volume": jsonable(v), "lower_bound": jsonable(lb),
                                   "pass": ok} for R, v, lb, ok in self.growth_checks]}


def filling_regular_check(balls, eps, fillings=None, *, c_n=None, n: int | None = None,
                          profile: BallGrowthProfile | None = None, lp_tol: float = 1e-9) -> FillingRegularReport:
    """Check ``vol B(R) <= (1 + eps) VolRemp(dB(R))`` per ball.

    ``fillings`` maps ``R`` to a :class:`~systolekit.chains.FillingResult` or
    ``None`` (essential boundary, treated as an infinite filling volume). When
    omitted, fillings are computed by LP. With ``c_n``, ``n`` and a profile,
    also checks ``vol B(R) >= C (R - eps)^n`` with
    ``C = 1 / ((1 + eps)^{n-1} c_n^{n-1} n^n)``.
    """
    from .chains import chain_volume, filling_lp

    checks = []
    for fb in balls:
        if fillings is None:
            try:
                fill = filling_lp(fb.boundary, fb.complex, lp_tol=lp_tol).volume
            except Infeasible:
                fill = INF
        else:
            if fb.R not in fillings:
                raise MissingFilling(f"no filling supplied for R = {fb.R}")
            res = fillings[fb.R]
            fill = INF if res is None else res.volume
        bv = chain_volume(fb.ball)
        bound = INF if fill == INF else _times(1 + eps, fill)
        checks.append((fb.R, bv, fill, bv <= bound))
    C, growth = None, []
    if c_n is not None and n is not None:
        if not c_n > 0:
            raise NonpositiveInput("c_n must be positive")
        C = 1 / (float(1 + eps) ** (n - 1) * float(c_n) ** (n - 1) * n ** n)
        if profile is not None:
            for R, vol in zip(profile.radii, profile.volumes):
                if R >= eps:
                    lb = C * float(R - eps) ** n
                    growth.append((R, vol, lb, float(vol) >= lb))
    return FillingRegularReport(eps, tuple(checks), C, tuple(growth))


# ----------------------------------------------------------------------------
# packings and nerves


def maximal_packing(G: GeodesicGraph, R0) -> list:
    """Greedy centers pairwise at least ``2 R0`` apart, scanning nodes by index."""
    centers: list = []
    for v in range(G.n_nodes):
        if all(G.distances(c)[v] >= 2 * R0 for c in centers):
            centers.append(v)
    return centers


@dataclass(frozen=True)
class NerveComplex:
    centers: tuple
    R0: object
    simplices: tuple  # sorted tuples of center positions
    max_dim: int
    cap_reached: bool  # simplices exist above max_dim

    @property
    def counts(self) -> dict:
        out = {k: 0 for k in range(self.max_dim + 1)}
        for s in self.simplices:
            out[len(s) - 1] += 1
        return out

    def to_dict(self) -> dict:
        return {"centers": list(self.centers), "R0": jsonable(self.R0),
                "simplices": [list(s) for s in self.simplices],
                "counts": {str(k): v for k, v in self.counts.items()},
                "max_dim": self.max_dim, "cap_reached": self.cap_reached, "approximate": True}


def nerve_of_cover(centers, R0, G: GeodesicGraph, *, max_dim: int = 3) -> NerveComplex:
    """Nerve of the closed balls of radius ``2 R0`` around ``centers``.

    Common points are searched among graph nodes, so a missed intersection
    can only remove simplices.
    """
    centers = tuple(centers)
    balls = []
    for c in centers:
        dist, _ = dijkstra(G, [c], cutoff=2 * R0)
        balls.append(frozenset(i for i, d in enumerate(dist) if d <= 2 * R0))
    level = [((i,), balls[i]) for i in range(len(centers))]
    simplices = [s for s, _ in level]
    cap_reached = False
    for dim in range(1, max_dim + 2):
        nxt = []
        for s, common in level:
            for j in range(s[-1] + 1, len(centers)):
                inter = common & balls[j]
                if inter:
                    nxt.append((s + (j,), inter))
        if dim > max_dim:
            cap_reached = bool(nxt)
            break
        simplices += [s for s, _ in nxt]
        level = nxt
        if not nxt:
            break
    return NerveComplex(centers, R0, tuple(sorted(simplices, key=lambda s: (len(s), s))), max_dim, cap_reached)


@dataclass(frozen=True)
class NerveBoundReport:
    N0: int
    bound: object
    count_ok: bool
    ball_volume_sum: object = None
    sum_ok: bool | None = None

    @property
    def verdict(self) -> bool:
        return self.count_ok and self.sum_ok is not False

    def to_dict(self) -> dict:
        return {"N0": self.N0, "bound": jsonable(self.bound), "count_ok": self.count_ok,
                "ball_volume_sum": jsonable(self.ball_volume_sum), "sum_ok": self.sum_ok,
                "verdict": "pass" if self.verdict else "fail"}


def nerve_count_bound_check(nerve: NerveComplex, total_vol, A_n, R0, profiles=None, *, n: int = 1) -> NerveBoundReport:
    """``N_0 <= vol / (A_n R0^n)`` and ``vol >= sum vol B_i(R0) >= N_0 A_n R0^n``."""
    N0 = len(nerve.centers)
    if N0 == 0:
        return NerveBoundReport(0, INF, True)
    denom = _times(A_n, _pow(R0, n))
    if denom == 0:
        bound = INF
    elif is_exact(total_vol) and is_exact(denom):
        bound = normalize(Fraction(total_vol) / Fraction(denom))
    else:
        bound = float(total_vol) / float(denom)
    count_ok = N0 <= bound
    if profiles is None:
        return NerveBoundReport(N0, bound, count_ok)
    vols = []
    for p in profiles:
        vols.append(p.volumes[list(p.radii).index(R0)])
    s = sum(vols)
    s = normalize(s) if is_exact(s) else s
    slack = 0 if is_exact(s) and is_exact(total_vol) else 1e-9 * float(total_vol)
    sum_ok = (total_vol + slack >= s) and (s >= _times(N0, denom))
    return NerveBoundReport(N0, bound, count_ok, s, sum_ok)


def gromov_constant(A_n, n: int):
    """``A_n / 2^n``."""
    if not A_n > 0:
        raise NonpositiveInput(f"A_n must be positive, got {A_n}")
    return normalize(Fraction(A_n) / 2 ** n) if is_exact(A_n) else A_n / 2 ** n


# ----------------------------------------------------------------------------
# systole monotonicity


@dataclass(frozen=True)
class MonotonicityReport:
    base_systole: object
    derived_systole: object

    @property
    def holds(self) -> bool:
        return self.derived_systole >= self.base_systole

    def to_dict(self) -> dict:
        return {"base_systole": jsonable(self.base_systole), "derived_systole": jsonable(self.derived_systole),
                "verdict": "pass" if self.holds else "fail"}


def systole_monotonicity_check(base, derived, *, level: int = 4, derived_level: int = 1,
                               workers: int = 1) -> MonotonicityReport:
    """Compare ``sys(V'')`` with ``sys(V)``; each argument is ``(V, g, phi)`` or ``(V, g, phi, G)``."""
    from .homotopy import relative_systole
    from .metric import build_geodesic_graph

    def sys_of(data, k):
        V, g, phi = data[:3]
        G = data[3] if len(data) > 3 else build_geodesic_graph(V, g, k)
        return relative_systole(V, g, G, phi, workers=workers)

    return MonotonicityReport(sys_of(base, level), sys_of(derived, derived_level))


def profiles_for_centers(V, g, G: GeodesicGraph, centers, radii, *, workers: int = 1) -> list:
    """Ball profiles for several centers, ordered by center."""
    return pmap(_profile_job, [(V, g, G, c, tuple(radii)) for c in sorted(centers)], workers=workers)


def _profile_job(args):
    V, g, G, c, radii = args
    return ball_volume_profile(V, g, G, c, radii)

