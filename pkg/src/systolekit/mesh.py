"""Finite simplicial pseudomanifolds with piecewise-flat metrics."""
from __future__ import annotations

import itertools
import json
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from ._numeric import exact_sqrt, is_exact, normalize, parse_number
from .errors import (
    BranchingViolation,
    DegenerateSimplex,
    HomogeneityViolation,
    MalformedComplex,
    MetricInfeasible,
    NonOrientable,
    NotStronglyConnected,
)

Simplex = tuple  # strictly increasing tuple of vertex labels

DEGENERACY_RTOL = 1e-12


def faces(simplex: Simplex) -> list[Simplex]:
    """Codimension-one faces, in deletion order (face ``i`` omits vertex ``i``)."""
    return [simplex[:i] + simplex[i + 1:] for i in range(len(simplex))]


def edge_key(u, v) -> tuple:
    if u == v:
        raise MalformedComplex(f"degenerate edge ({u}, {v})")
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class SimplicialComplex:
    """Finite simplicial complex stored as canonical vertex tuples by dimension."""

    simplices: dict  # dim -> tuple of sorted vertex tuples

    def __post_init__(self):
        seen = set()
        for d, group in self.simplices.items():
            for s in group:
                if len(s) != d + 1:
                    raise MalformedComplex(f"simplex {s} listed in dimension {d}")
                if any(s[i] >= s[i + 1] for i in range(len(s) - 1)):
                    raise MalformedComplex(f"simplex {s} is not strictly sorted")
                if s in seen:
                    raise MalformedComplex(f"duplicate simplex {s}")
                seen.add(s)
        for d, group in self.simplices.items():
            if d == 0:
                continue
            for s in group:
                for f in faces(s):
                    if f not in seen:
                        raise MalformedComplex(f"face {f} of {s} is missing")

    @classmethod
    def from_simplices(cls, simplices) -> "SimplicialComplex":
        """Canonicalize vertex lists and close under taking faces."""
        closed: set = set()
        for s in simplices:
            t = tuple(sorted(s))
            if len(set(t)) != len(t):
                raise MalformedComplex(f"simplex {list(s)} repeats a vertex")
            if not t:
                raise MalformedComplex("empty simplex")
            for r in range(1, len(t) + 1):
                closed.update(itertools.combinations(t, r))
        by_dim: dict = {}
        for s in closed:
            by_dim.setdefault(len(s) - 1, []).append(s)
        return cls({d: tuple(sorted(g)) for d, g in sorted(by_dim.items())})

    @property
    def dim(self) -> int:
        return max(self.simplices) if self.simplices else -1

    @property
    def vertices(self) -> tuple:
        return tuple(s[0] for s in self.simplices.get(0, ()))

    @property
    def edges(self) -> tuple:
        return self.simplices.get(1, ())

    def of_dim(self, d: int) -> tuple:
        return self.simplices.get(d, ())

    def __iter__(self):
        for d in sorted(self.simplices):
            yield from self.simplices[d]

    def __contains__(self, s) -> bool:
        t = tuple(s)
        return t in self.simplices.get(len(t) - 1, ())


@dataclass(frozen=True)
class Pseudomanifold:
    complex: SimplicialComplex
    dim: int
    orientable: bool
    fundamental_cycle: tuple = ()  # ((top simplex, +1/-1), ...)

    @property
    def top_simplices(self) -> tuple:
        return self.complex.of_dim(self.dim)

    @property
    def vertices(self) -> tuple:
        return self.complex.vertices

    def require_orientable(self) -> None:
        if not self.orientable:
            raise NonOrientable("pseudomanifold admits no coherent orientation")


@dataclass(frozen=True)
class PLMetric:
    """Piecewise-flat metric given by one length per edge.

    A single global edge map makes lengths agree on shared faces automatically.
    """

    edge_lengths: dict = field(default_factory=dict)  # (u, v) with u < v -> length
    degenerate: bool = False

    def length(self, u, v):
        try:
            return self.edge_lengths[edge_key(u, v)]
        except KeyError:
            raise MetricInfeasible(f"edge ({u}, {v}) has no length") from None

    @property
    def exact(self) -> bool:
        return all(is_exact(x) for x in self.edge_lengths.values())

    def scaled(self, factor) -> "PLMetric":
        return PLMetric({e: normalize(l * factor) for e, l in self.edge_lengths.items()},
                        self.degenerate)

    @classmethod
    def for_complex(cls, complex_: SimplicialComplex, lengths, degenerate: bool = False) -> "PLMetric":
        """Build and validate a metric on ``complex_``.

        ``lengths`` is a mapping ``(u, v) -> length`` or an iterable of
        ``(u, v, length)`` triples.
        """
        items = lengths.items() if isinstance(lengths, dict) else (((u, v), l) for u, v, l in lengths)
        table = {}
        for (u, v), l in items:
            key = edge_key(u, v)
            if key in table:
                raise MalformedComplex(f"edge {key} has two lengths")
            table[key] = l
        metric = cls(table, degenerate)
        metric.validate(complex_)
        return metric

    def validate(self, complex_: SimplicialComplex) -> None:
        edges = set(complex_.edges)
        for e, l in self.edge_lengths.items():
            if e not in edges:
                raise MalformedComplex(f"length given for edge {e} not in the complex")
            if l < 0 or (l == 0 and not self.degenerate):
                raise MetricInfeasible(f"edge {e} has non-positive length {l}", simplex=e)
        for e in edges:
            if e not in self.edge_lengths:
                raise MetricInfeasible(f"edge {e} has no length", simplex=e)
        for d in range(2, complex_.dim + 1):
            for s in complex_.of_dim(d):
                vol2 = squared_volume(s, self)
                if vol2 == 0 and not self.degenerate:
                    raise DegenerateSimplex(f"simplex {s} is flat-degenerate", simplex=s)


def validate_pseudomanifold(complex_: SimplicialComplex, n: int) -> Pseudomanifold:
    """Check the pseudomanifold axioms and decide orientability.

    The axioms are dimension homogeneity, non-branching ((n-1)-faces have
    exactly two cofaces) and strong connectivity. Link conditions are not
    checked.
    """
    if n < 1:
        raise MalformedComplex("dimension must be at least 1")
    if complex_.dim != n:
        raise HomogeneityViolation(f"complex has dimension {complex_.dim}, expected {n}")
    tops = complex_.of_dim(n)
    covered = set()
    for s in tops:
        for r in range(1, n + 1):
            covered.update(itertools.combinations(s, r))
    for s in complex_:
        if len(s) <= n and s not in covered:
            raise HomogeneityViolation(f"simplex {s} is not a face of an {n}-simplex", simplex=s)

    cofaces: dict = {f: [] for f in complex_.of_dim(n - 1)}
    for ti, s in enumerate(tops):
        for pos, f in enumerate(faces(s)):
            cofaces[f].append((ti, pos))
    for f, cf in cofaces.items():
        if len(cf) != 2:
            raise BranchingViolation(f"{n - 1}-simplex {f} has {len(cf)} cofaces", simplex=f)

    neighbours: list = [[] for _ in tops]
    for (a, pa), (b, pb) in cofaces.values():
        neighbours[a].append((b, pa, pb))
        neighbours[b].append((a, pb, pa))

    # coherent orientation: a shared face must be induced with opposite signs
    sign = [0] * len(tops)
    sign[0] = 1
    orientable = True
    queue = deque([0])
    while queue:
        a = queue.popleft()
        for b, pa, pb in neighbours[a]:
            want = -sign[a] * (-1) ** pa * (-1) ** pb
            if sign[b] == 0:
                sign[b] = want
                queue.append(b)
            elif sign[b] != want:
                orientable = False
    missing = [tops[i] for i, s in enumerate(sign) if s == 0]
    if missing:
        raise NotStronglyConnected(
            f"{len(missing)} top simplices are not reachable from {tops[0]}", simplex=missing[0])
    cycle = tuple(zip(tops, sign)) if orientable else ()
    return Pseudomanifold(complex_, n, orientable, cycle)


def chain_boundary(chain) -> dict:
    """Integer simplicial boundary of ``[(simplex, coeff), ...]``."""
    out: dict = {}
    for s, c in chain:
        for i, f in enumerate(faces(s)):
            out[f] = out.get(f, 0) + (-1) ** i * c
    return {f: c for f, c in out.items() if c != 0}


def _det(matrix):
    """Determinant; exact for rational entries."""
    if all(is_exact(x) for row in matrix for x in row):
        a = [[Fraction(x) for x in row] for row in matrix]
        size = len(a)
        det = Fraction(1)
        for col in range(size):
            pivot = next((r for r in range(col, size) if a[r][col] != 0), None)
            if pivot is None:
                return 0
            if pivot != col:
                a[col], a[pivot] = a[pivot], a[col]
                det = -det
            det *= a[col][col]
            for r in range(col + 1, size):
                factor = a[r][col] / a[col][col]
                if factor:
                    for c in range(col, size):
                        a[r][c] -= factor * a[col][c]
        return normalize(det)
    return float(np.linalg.det(np.array(matrix, dtype=float)))


def cayley_menger_squared_volume(sq_dist) -> object:
    """Squared k-volume of a flat simplex from its squared edge-length matrix."""
    k = len(sq_dist) - 1
    if k == 0:
        return 1
    cm = [[0] + [1] * (k + 1)]
    for i in range(k + 1):
        cm.append([1] + list(sq_dist[i]))
    det = _det(cm)
    scale = (-1) ** (k + 1) * Fraction(1, 2 ** k * math.factorial(k) ** 2)
    if is_exact(det):
        return normalize(scale * det)
    return float(scale) * det


def _sq_dist_matrix(simplex: Simplex, metric: PLMetric) -> list:
    m = len(simplex)
    out = [[0] * m for _ in range(m)]
    for i in range(m):
        for j in range(i + 1, m):
            l = metric.length(simplex[i], simplex[j])
            out[i][j] = out[j][i] = l * l
    return out


def squared_volume(simplex: Simplex, metric: PLMetric):
    """Squared flat volume with the degeneracy tolerance applied.

    Values within ``1e-12 * (max edge)^(2k)`` of zero are reported as 0;
    anything more negative raises :class:`MetricInfeasible`.
    """
    s = tuple(simplex)
    k = len(s) - 1
    if k == 1:
        l = metric.length(*s)
        return l * l
    if k == 0:
        return 1
    d2 = _sq_dist_matrix(s, metric)
    vol2 = cayley_menger_squared_volume(d2)
    if is_exact(vol2):
        if vol2 < 0:
            raise MetricInfeasible(f"edge lengths of {s} violate the simplex inequalities", simplex=s)
        return vol2
    longest = max(max(row) for row in d2)
    tol = DEGENERACY_RTOL * longest ** k
    if vol2 < -tol:
        raise MetricInfeasible(f"edge lengths of {s} violate the simplex inequalities", simplex=s)
    return 0.0 if vol2 <= tol else vol2


def simplex_volume(simplex: Simplex, metric: PLMetric):
    """Flat k-volume of ``simplex`` from its edge lengths (Cayley-Menger)."""
    s = tuple(simplex)
    if len(s) == 2:
        return metric.length(*s)
    vol2 = squared_volume(s, metric)
    if vol2 == 0 and len(s) > 1 and not metric.degenerate:
        raise DegenerateSimplex(f"simplex {s} is flat-degenerate", simplex=s)
    return exact_sqrt(vol2)


def total_volume(V: Pseudomanifold, g: PLMetric):
    total = 0
    for s in V.top_simplices:
        total += simplex_volume(s, g)
    return normalize(total) if is_exact(total) else total


def simplex_coordinates(simplex: Simplex, metric: PLMetric) -> np.ndarray:
    """Vertex positions in R^k realizing the edge lengths (first vertex at 0)."""
    s = tuple(simplex)
    k = len(s) - 1
    if k == 0:
        return np.zeros((1, 0))
    d2 = np.array(_sq_dist_matrix(s, metric), dtype=float)
    gram = 0.5 * (d2[0, 1:][:, None] + d2[0, 1:][None, :] - d2[1:, 1:])
    evals, evecs = np.linalg.eigh(gram)
    root = evecs * np.sqrt(np.clip(evals, 0.0, None))
    # gram = root @ root.T, so rows of root are coordinates
    return np.vstack([np.zeros((1, k)), root])


# ----------------------------------------------------------------------------
# JSON I/O and standard models


def mesh_from_dict(doc: dict) -> tuple[Pseudomanifold, PLMetric]:
    """Parse ``{"dim", "simplices", "edge_lengths"}`` into a validated mesh."""
    try:
        n = int(doc["dim"])
        simplices = [list(s) for s in doc["simplices"]]
        raw = doc["edge_lengths"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed mesh document: {exc}") from exc
    lengths = [(u, v, parse_number(l)) for u, v, l in raw]
    complex_ = SimplicialComplex.from_simplices(simplices)
    V = validate_pseudomanifold(complex_, n)
    g = PLMetric.for_complex(complex_, lengths, degenerate=bool(doc.get("degenerate", False)))
    return V, g


def load_mesh(path) -> tuple[Pseudomanifold, PLMetric]:
    return mesh_from_dict(json.loads(Path(path).read_text()))


def mesh_to_dict(V: Pseudomanifold, g: PLMetric) -> dict:
    def num(x):
        if isinstance(x, Fraction):
            return str(x)
        return x

    doc = {
        "dim": V.dim,
        "simplices": [list(s) for s in V.top_simplices],
        "edge_lengths": [[u, v, num(l)] for (u, v), l in sorted(g.edge_lengths.items())],
    }
    if g.degenerate:
        doc["degenerate"] = True
    return doc


def circle_mesh(lengths) -> tuple[Pseudomanifold, PLMetric]:
    """Cycle on vertices ``0..m-1``; edge ``i`` joins ``i`` and ``i+1 mod m``."""
    lengths = list(lengths)
    m = len(lengths)
    if m < 3:
        raise MalformedComplex("a simplicial circle needs at least 3 edges")
    edges = [(i, (i + 1) % m) for i in range(m)]
    complex_ = SimplicialComplex.from_simplices(edges)
    V = validate_pseudomanifold(complex_, 1)
    g = PLMetric.for_complex(complex_, [(u, v, l) for (u, v), l in zip(edges, lengths)])
    return V, g


def regular_circle(perimeter, m: int = 3) -> tuple[Pseudomanifold, PLMetric]:
    step = Fraction(perimeter) / m if is_exact(perimeter) else perimeter / m
    return circle_mesh([normalize(step) if is_exact(step) else step] * m)


def flat_torus_mesh(a, b, m: int = 3, p: int | None = None) -> tuple[Pseudomanifold, PLMetric]:
    """Flat ``a x b`` torus triangulated by an ``m x p`` grid of split squares.

    Vertex ``i * p + j`` sits at ``(i a / m, j b / p)``; each square is cut
    along its ``(i, j)-(i+1, j+1)`` diagonal. ``m, p >= 3`` keeps the
    triangulation simplicial.
    """
    p = m if p is None else p
    if m < 3 or p < 3:
        raise MalformedComplex("grid torus needs at least 3 x 3 squares")
    hx, hy = a / m, b / p
    diag = math.hypot(hx, hy)

    def vid(i, j):
        return (i % m) * p + (j % p)

    tris, lengths = [], {}
    for i in range(m):
        for j in range(p):
            v00, v10, v01, v11 = vid(i, j), vid(i + 1, j), vid(i, j + 1), vid(i + 1, j + 1)
            tris += [(v00, v10, v11), (v00, v11, v01)]
            lengths[edge_key(v00, v10)] = hx
            lengths[edge_key(v00, v01)] = hy
            lengths[edge_key(v00, v11)] = diag
    complex_ = SimplicialComplex.from_simplices(tris)
    V = validate_pseudomanifold(complex_, 2)
    g = PLMetric.for_complex(complex_, lengths)
    return V, g


def tetrahedron_boundary(edge: float = 1.0) -> tuple[Pseudomanifold, PLMetric]:
    tris = list(itertools.combinations(range(4), 3))
    complex_ = SimplicialComplex.from_simplices(tris)
    V = validate_pseudomanifold(complex_, 2)
    g = PLMetric.for_complex(complex_, {e: edge for e in complex_.edges})
    return V, g
