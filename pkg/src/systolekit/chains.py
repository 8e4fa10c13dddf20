"""Cubical chains, sup-norm volumes, LP fillings and the isoperimetric constants."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ._numeric import is_exact, jsonable, normalize, parse_number
from .cubical import FREE, CubeCell, CubeComplex
from .errors import DegreeMismatch, Infeasible, NoFeasibleA, NonpositiveInput


@dataclass(frozen=True)
class CubicalChain:
    complex: CubeComplex
    degree: int
    coefficients: dict = field(default_factory=dict)  # CubeCell -> number

    def __post_init__(self):
        clean = {}
        for c, x in self.coefficients.items():
            c = c if isinstance(c, CubeCell) else CubeCell(c)
            if c not in self.complex.cells:
                raise DegreeMismatch(f"cell {c} is not in the complex")
            if c.dim != self.degree:
                raise DegreeMismatch(f"cell {c} has dimension {c.dim}, chain degree is {self.degree}")
            if x != 0:
                clean[c] = x
        object.__setattr__(self, "coefficients", dict(sorted(clean.items(), key=lambda kv: str(kv[0]))))

    @property
    def is_zero(self) -> bool:
        return not self.coefficients

    @property
    def support(self) -> tuple:
        return tuple(self.coefficients)

    def __add__(self, other: "CubicalChain") -> "CubicalChain":
        if other.degree != self.degree:
            raise DegreeMismatch("cannot add chains of different degree")
        out = dict(self.coefficients)
        for c, x in other.coefficients.items():
            out[c] = out.get(c, 0) + x
        return CubicalChain(self.complex, self.degree, out)

    def scaled(self, k) -> "CubicalChain":
        return CubicalChain(self.complex, self.degree, {c: k * x for c, x in self.coefficients.items()})

    def to_dict(self) -> dict:
        return {"degree": self.degree,
                "coefficients": [[str(c), jsonable(x)] for c, x in self.coefficients.items()]}


def chain_from_dict(doc: dict, K: CubeComplex) -> CubicalChain:
    coeffs = {}
    for spec, x in doc["coefficients"]:
        c = CubeCell(spec)
        coeffs[c] = coeffs.get(c, 0) + parse_number(x)
    return CubicalChain(K, int(doc["degree"]), coeffs)


def cell_boundary(cell: CubeCell) -> dict:
    """``sum_j (-1)^j (F_j^1 - F_j^0)`` over the free coordinates."""
    out = {}
    for j, i in enumerate(cell.free):
        s = (-1) ** j
        out[cell.face(i, 1)] = out.get(cell.face(i, 1), 0) + s
        out[cell.face(i, 0)] = out.get(cell.face(i, 0), 0) - s
    return out


def boundary(c: CubicalChain) -> CubicalChain:
    if c.degree < 1:
        return CubicalChain(c.complex, 0, {})
    out: dict = {}
    for cell, x in c.coefficients.items():
        for f, s in cell_boundary(cell).items():
            out[f] = out.get(f, 0) + s * x
    return CubicalChain(c.complex, c.degree - 1, out)


def linf_cell_volume(cell: CubeCell) -> int:
    """Every axis cell has unit volume; 0-cells use counting measure."""
    return 1


def chain_volume(c: CubicalChain):
    total = sum(abs(x) * linf_cell_volume(cell) for cell, x in c.coefficients.items())
    return normalize(total) if is_exact(total) else total


def boundary_matrix(K: CubeComplex, k: int) -> tuple:
    """``(rows, cols, B)``: ``B`` maps ``(k+1)``-cells to ``k``-cells."""
    rows = sorted((c for c in K.cells if c.dim == k), key=str)
    cols = sorted((c for c in K.cells if c.dim == k + 1), key=str)
    r_index = {c: i for i, c in enumerate(rows)}
    B = np.zeros((len(rows), len(cols)), dtype=np.int64)
    for j, c in enumerate(cols):
        for f, s in cell_boundary(c).items():
            B[r_index[f], j] += s
    return rows, cols, B


def _rank(M: np.ndarray) -> int:
    if M.size == 0:
        return 0
    from sympy import Matrix
    if M.shape[0] * M.shape[1] <= 4000 and np.all(M == np.round(M)):
        return Matrix(M.astype(np.int64).tolist()).rank()
    return int(np.linalg.matrix_rank(M))


@dataclass(frozen=True)
class RankCertificate:
    rank_B: int
    rank_augmented: int

    @property
    def is_boundary(self) -> bool:
        return self.rank_B == self.rank_augmented


@dataclass(frozen=True)
class FillingResult:
    filler: CubicalChain
    volume: object
    tube_radius_certificate: object
    exact: bool
    certificate: RankCertificate
    lp_tol: float

    def to_dict(self) -> dict:
        return {"filler": self.filler.to_dict(), "volume": jsonable(self.volume),
                "tube_radius_certificate": jsonable(self.tube_radius_certificate),
                "exact": self.exact, "lp_tol": self.lp_tol,
                "rank_B": self.certificate.rank_B, "rank_augmented": self.certificate.rank_augmented}


def rank_certificate(z: CubicalChain, K: CubeComplex) -> RankCertificate:
    rows, _, B = boundary_matrix(K, z.degree)
    vec = np.array([[z.coefficients.get(r, 0)] for r in rows], dtype=float)
    aug = np.hstack([B.astype(float), vec]) if B.size else vec
    return RankCertificate(_rank(B.astype(float)), _rank(aug))


def _point_box_dist(p, cell: CubeCell):
    return max((0 if s == FREE else abs(x - int(s)) for x, s in zip(p, cell.spec)), default=0)


def tube_radius(filler: CubicalChain, z: CubicalChain, level: int = 2):
    """Sampled largest sup-distance from the filler's support to the cycle's support."""
    if filler.is_zero:
        return 0
    if z.is_zero:
        return math.inf
    worst = 0
    for cell in filler.support:
        for g in cell.grid_points(level):
            p = [Fraction(x, level) for x in g]
            worst = max(worst, min(_point_box_dist(p, c) for c in z.support))
    return normalize(worst)


def filling_lp(z: CubicalChain, K: CubeComplex, *, lp_tol: float = 1e-9) -> FillingResult:
    """Minimal-volume real filling of the cycle ``z`` inside ``K``.

    Solves ``min sum vol_j (x+_j + x-_j)`` subject to ``B (x+ - x-) = z``.
    The optimal vertex is rationalized when that reproduces ``z`` exactly.
    """
    if z.degree < 0:
        raise DegreeMismatch("negative degree")
    if not boundary(z).is_zero:
        raise DegreeMismatch("input chain is not a cycle")
    cert = rank_certificate(z, K)
    rows, cols, B = boundary_matrix(K, z.degree)
    if z.is_zero:
        empty = CubicalChain(K, z.degree + 1, {})
        return FillingResult(empty, 0, 0, True, cert, lp_tol)
    if not cols:
        raise Infeasible(f"complex has no {z.degree + 1}-cells", rank_B=cert.rank_B,
                         rank_augmented=cert.rank_augmented)
    from scipy.optimize import linprog

    b = np.array([float(z.coefficients.get(r, 0)) for r in rows])
    vols = np.array([float(linf_cell_volume(c)) for c in cols])
    A_eq = np.hstack([B, -B]).astype(float)
    res = linprog(np.concatenate([vols, vols]), A_eq=A_eq, b_eq=b, bounds=(0, None),
                  method="highs", options={"primal_feasibility_tolerance": max(lp_tol, 1e-10)})
    if res.status == 2:
        raise Infeasible("filling LP is infeasible", rank_B=cert.rank_B, rank_augmented=cert.rank_augmented)
    if res.status != 0:
        raise Infeasible(f"LP solver failed: {res.message}")
    x = res.x[: len(cols)] - res.x[len(cols):]
    exact = all(is_exact(v) for v in z.coefficients.values())
    coeffs = {}
    if exact:
        q = [Fraction(float(v)).limit_denominator(10**6) for v in x]
        residual = [sum(int(B[i, j]) * q[j] for j in range(len(cols)) if B[i, j]) - Fraction(z.coefficients.get(r, 0))
                    for i, r in enumerate(rows)]
        exact = not any(residual)
        if exact:
            coeffs = {c: normalize(v) for c, v in zip(cols, q) if v != 0}
    if not exact:
        coeffs = {c: float(v) for c, v in zip(cols, x) if abs(v) > lp_tol}
    filler = CubicalChain(K, z.degree + 1, coeffs)
    return FillingResult(filler, chain_volume(filler), tube_radius(filler, z), exact, cert, lp_tol)


# ----------------------------------------------------------------------------
# isoperimetric constants


@dataclass(frozen=True)
class IsoperimetricConstants:
    n: int
    C_n: object
    alpha_n: object
    beta_n: object

    def to_dict(self) -> dict:
        return {"n": self.n, "C_n": jsonable(self.C_n), "alpha_n": jsonable(self.alpha_n),
                "beta_n": jsonable(self.beta_n)}


def isoperimetric_constants(n: int, C_n=1) -> IsoperimetricConstants:
    """``alpha_n = 1/(4^n (n+1)^n C_n^n)`` and ``beta_n = C_n (2^{n+1} + (n+1)(1 + 2^n))``."""
    if n < 1:
        raise NonpositiveInput(f"dimension must be >= 1, got {n}")
    if not C_n > 0:
        raise NonpositiveInput(f"C_n must be positive, got {C_n}")
    C = Fraction(C_n) if is_exact(C_n) else C_n
    alpha = 1 / (Fraction(4 ** n * (n + 1) ** n) * C ** n) if is_exact(C) else 1 / (4 ** n * (n + 1) ** n * C ** n)
    beta = C * (2 ** (n + 1) + (n + 1) * (1 + 2 ** n))
    return IsoperimetricConstants(n, normalize(C), normalize(alpha), normalize(beta))


@dataclass(frozen=True)
class RegularityConstant:
    A: object
    n: int
    C_prev: object
    C_n: object
    slacks: dict  # constraint -> slack at A (nonnegative)
    binding: str
    strict_bound: object
    tolerance: float  # relative bisection tolerance
    maximal: bool  # A (1 + 1e-9) violates some constraint or the strict bound

    def to_dict(self) -> dict:
        return {"A": jsonable(self.A), "n": self.n, "C_prev": jsonable(self.C_prev),
                "C_n": jsonable(self.C_n), "slacks": {k: jsonable(v) for k, v in self.slacks.items()},
                "binding": self.binding, "strict_bound": jsonable(self.strict_bound),
                "tolerance": self.tolerance, "maximal": self.maximal}


def _constraints(A, n, prev: IsoperimetricConstants, cur: IsoperimetricConstants) -> dict:
    """Slack of each constraint at ``A`` (nonnegative means satisfied)."""
    a2 = A + float(prev.beta_n) * (float(A) * n) ** (n / (n - 1))
    return {
        "A1": prev.alpha_n - A * n,
        "A2": float(cur.alpha_n) - a2,
        "A3": cur.alpha_n / 2 - A if is_exact(A) else float(cur.alpha_n) / 2 - A,
    }


def regularity_constant_A(n: int, C_prev=1, C_n=None, *, tol: float = 1e-12) -> RegularityConstant:
    """Largest ``A`` meeting the three growth constraints, strictly below ``1/(beta_{n-1}^{n-1} n^n)``.

    Each left-hand side increases with ``A``, so the feasible set is an
    interval ``[0, A*]``; ``A*`` is the smaller closed-form cap when that
    satisfies the remaining constraint, otherwise a bisection root.
    """
    if n < 2:
        raise ValueError("regularity constant needs n >= 2")
    C_n = C_prev if C_n is None else C_n
    prev, cur = isoperimetric_constants(n - 1, C_prev), isoperimetric_constants(n, C_n)
    strict = normalize(1 / (Fraction(prev.beta_n) ** (n - 1) * n ** n)) if is_exact(prev.beta_n) \
        else 1 / (prev.beta_n ** (n - 1) * n ** n)
    caps = {"A1": normalize(Fraction(prev.alpha_n) / n) if is_exact(prev.alpha_n) else prev.alpha_n / n,
            "A3": normalize(Fraction(cur.alpha_n) / 2) if is_exact(cur.alpha_n) else cur.alpha_n / 2}
    name, cap = min(caps.items(), key=lambda kv: (kv[1], kv[0]))
    if _constraints(cap, n, prev, cur)["A2"] >= 0:
        A, binding = cap, name
    else:
        lo, hi = 0.0, float(cap)
        while hi - lo > tol * hi:
            mid = (lo + hi) / 2
            if _constraints(mid, n, prev, cur)["A2"] >= 0:
                lo = mid
            else:
                hi = mid
        A, binding = lo, "A2"
    if not A < strict:
        A = float(strict) * (1 - 1e-12)
        binding = "strict"
    if not A > 0:
        raise NoFeasibleA(f"no positive A for n={n}, C_prev={C_prev}, C_n={C_n}")
    slacks = _constraints(A, n, prev, cur)
    slacks["strict"] = strict - A if is_exact(A) else float(strict) - A
    if any(s < 0 for s in slacks.values()):
        raise NoFeasibleA("internal error: returned A violates a constraint", slacks=list(slacks.values()))
    up = float(A) * (1 + 1e-9)
    maximal = any(s < 0 for s in _constraints(up, n, prev, cur).values()) or up >= float(strict)
    return RegularityConstant(A, n, prev.C_n, cur.C_n, slacks, binding, strict, tol, maximal)


@dataclass(frozen=True)
class IsoperimetricVerdict:
    verdict: str  # "pass" | "fail" | "hypothesis not met"
    cycle_volume: object
    filling_volume: object
    volume_bound: object
    tube_radius: object
    tube_bound: object
    constants: IsoperimetricConstants

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "cycle_volume": jsonable(self.cycle_volume),
                "filling_volume": jsonable(self.filling_volume), "volume_bound": jsonable(self.volume_bound),
                "tube_radius": jsonable(self.tube_radius), "tube_bound": jsonable(self.tube_bound),
                "constants": self.constants.to_dict()}


def _root(x, num: int, den: int):
    """``x ** (num / den)``, exact when possible."""
    if is_exact(x) and num % den == 0:
        return normalize(Fraction(x) ** (num // den))
    return float(x) ** (num / den)


def isoperimetric_check(z: CubicalChain, result: FillingResult, consts: IsoperimetricConstants) -> IsoperimetricVerdict:
    """Compare a filling against ``beta_n vol(z)^{(n+1)/n}`` and the tube radius ``beta_n vol(z)^{1/n}``."""
    n = consts.n
    if z.degree != n:
        raise DegreeMismatch(f"cycle degree {z.degree} does not match n={n}")
    vz = chain_volume(z)
    vbound = consts.beta_n * _root(vz, n + 1, n)
    tbound = consts.beta_n * _root(vz, 1, n)
    if vz > consts.alpha_n:
        verdict = "hypothesis not met"
    elif result.volume <= vbound and result.tube_radius_certificate <= tbound:
        verdict = "pass"
    else:
        verdict = "fail"
    return IsoperimetricVerdict(verdict, vz, result.volume, normalize(vbound), result.tube_radius_certificate,
                                normalize(tbound), consts)


# ----------------------------------------------------------------------------
# standard instances


def square_complex(N: int = 2) -> CubeComplex:
    return CubeComplex.closure(N, [CubeCell((FREE, FREE) + ("0",) * (N - 2))])


def square_boundary(K: CubeComplex, cell: CubeCell) -> CubicalChain:
    """Boundary cycle of a cell, as a chain on ``K``."""
    return boundary(CubicalChain(K, cell.dim, {cell: 1}))
