"""Cube complexes in ``[0, 1]^N``, the collar retraction and the coordinate embedding.

A cell is a tuple of per-coordinate tags: ``"0"`` or ``"1"`` for a fixed
coordinate, ``"*"`` for a free one. The embedding sends a node ``v`` to the
clamped distances to the net points, then retracts the ``eps``-collar of
every face onto that face.
"""
from __future__ import annotations

import heapq
import itertools
import math
import random
from dataclasses import dataclass
from fractions import Fraction

from ._numeric import is_exact, normalize
from ._parallel import pmap
from .errors import NetTooSparse, OutOfRange, PointNotInComplex
from .metric import INF, EpsilonNet, GeodesicGraph

FREE = "*"


def _div(a, b):
    if is_exact(a) and is_exact(b):
        return normalize(Fraction(a) / Fraction(b))
    return a / b


# ----------------------------------------------------------------------------
# cells and complexes


@dataclass(frozen=True, order=True)
class CubeCell:
    spec: tuple  # one of "0", "1", "*" per coordinate

    def __post_init__(self):
        spec = tuple(self.spec.split(",") if isinstance(self.spec, str) else self.spec)
        if any(s not in ("0", "1", FREE) for s in spec):
            raise ValueError(f"bad cell spec {self.spec!r}")
        object.__setattr__(self, "spec", spec)

    @property
    def ambient_dim(self) -> int:
        return len(self.spec)

    @property
    def dim(self) -> int:
        return self.spec.count(FREE)

    @property
    def free(self) -> tuple:
        return tuple(i for i, s in enumerate(self.spec) if s == FREE)

    def face(self, i: int, value: int) -> "CubeCell":
        """Fix free coordinate ``i`` to ``value``."""
        if self.spec[i] != FREE:
            raise ValueError(f"coordinate {i} is not free")
        spec = list(self.spec)
        spec[i] = str(value)
        return CubeCell(tuple(spec))

    def faces(self):
        """All faces including the cell itself."""
        free = self.free
        for choice in itertools.product((FREE, "0", "1"), repeat=len(free)):
            spec = list(self.spec)
            for i, c in zip(free, choice):
                spec[i] = c
            yield CubeCell(tuple(spec))

    def contains(self, p) -> bool:
        return all(s == FREE and 0 <= x <= 1 or s != FREE and x == int(s) for s, x in zip(self.spec, p))

    def zero_coordinates(self) -> tuple:
        return tuple(i for i, s in enumerate(self.spec) if s == "0")

    def grid_points(self, level: int):
        """Integer points ``z`` with ``z / level`` in the cell."""
        axes = [range(level + 1) if s == FREE else (int(s) * level,) for s in self.spec]
        return itertools.product(*axes)

    def __str__(self) -> str:
        return ",".join(self.spec)


@dataclass(frozen=True)
class CubeComplex:
    ambient_dim: int
    cells: frozenset

    @classmethod
    def closure(cls, ambient_dim: int, cells) -> "CubeComplex":
        out = set()
        for c in cells:
            c = c if isinstance(c, CubeCell) else CubeCell(c)
            if c.ambient_dim != ambient_dim:
                raise ValueError(f"cell {c} has the wrong ambient dimension")
            if c not in out:
                out.update(c.faces())
        return cls(ambient_dim, frozenset(out))

    @property
    def dim(self) -> int:
        return max((c.dim for c in self.cells), default=-1)

    def sorted_cells(self) -> list:
        return sorted(self.cells, key=str)

    def census(self) -> dict:
        out: dict = {}
        for c in self.cells:
            out[c.dim] = out.get(c.dim, 0) + 1
        return dict(sorted(out.items()))

    def euler_characteristic(self) -> int:
        return sum((-1) ** d * n for d, n in self.census().items())

    def maximal_cells(self) -> list:
        cells = self.cells
        return [c for c in self.sorted_cells()
                if not any(CubeCell(tuple(FREE if j == i else s for j, s in enumerate(c.spec))) in cells
                           for i in range(self.ambient_dim) if c.spec[i] != FREE)]

    def contains_point(self, p) -> bool:
        return minimal_face(p) in self.cells

    def in_coordinate_faces(self) -> bool:
        """Every cell has some coordinate fixed at 0."""
        return all(c.zero_coordinates() for c in self.cells)

    def to_dict(self) -> dict:
        return {"ambient_dim": self.ambient_dim,
                "cells": [{"spec": str(c)} for c in self.sorted_cells()]}

    @classmethod
    def from_dict(cls, doc: dict) -> "CubeComplex":
        return cls.closure(int(doc["ambient_dim"]), [CubeCell(c["spec"]) for c in doc["cells"]])


def minimal_face(p) -> CubeCell:
    """Smallest face of the unit cube containing ``p``."""
    spec = []
    for x in p:
        if not 0 <= x <= 1:
            raise OutOfRange(f"coordinate {x} outside [0, 1]")
        spec.append("0" if x == 0 else "1" if x == 1 else FREE)
    return CubeCell(tuple(spec))


def random_subcomplex(N: int, rng: random.Random, n_cells: int = 3, max_dim: int | None = None) -> CubeComplex:
    max_dim = N if max_dim is None else max_dim
    cells = []
    for _ in range(n_cells):
        d = rng.randint(0, max_dim)
        free = set(rng.sample(range(N), d))
        cells.append(CubeCell(tuple(FREE if i in free else rng.choice("01") for i in range(N))))
    return CubeComplex.closure(N, cells)


# ----------------------------------------------------------------------------
# retraction and embedding


@dataclass(frozen=True)
class ExtensionParams:
    eps: object
    clamp: object = 1

    def __post_init__(self):
        if not 0 < self.eps < Fraction(1, 2):
            raise OutOfRange(f"eps must lie in (0, 1/2), got {self.eps}")
        if not self.clamp > 0:
            raise OutOfRange(f"clamp must be positive, got {self.clamp}")

    @property
    def lipschitz(self):
        return _div(1, 1 - 2 * self.eps)


def _check_eps(eps) -> None:
    if not 0 < eps < Fraction(1, 2):
        raise OutOfRange(f"eps must lie in (0, 1/2), got {eps}")


def retract_scalar(t, eps):
    """Collapse ``[0, eps]`` to 0 and ``[1 - eps, 1]`` to 1, affine between."""
    _check_eps(eps)
    if not 0 <= t <= 1:
        raise OutOfRange(f"t = {t} outside [0, 1]")
    if t <= eps:
        return 0
    if t >= 1 - eps:
        return 1
    return _div(t - eps, 1 - 2 * eps)


def retract_complex(p, eps) -> tuple:
    return tuple(retract_scalar(x, eps) for x in p)


def coordinate_map(G: GeodesicGraph, net, v: int, params: ExtensionParams) -> tuple:
    """``min(dist(v, v_i), clamp) / clamp`` for each net point ``v_i``."""
    points = net.points if isinstance(net, EpsilonNet) else tuple(net)
    d = params.clamp
    return tuple(_div(min(G.distances(p)[v], d), d) for p in points)


def embed(G: GeodesicGraph, net, v: int, params: ExtensionParams) -> tuple:
    return retract_complex(coordinate_map(G, net, v, params), params.eps)


def embed_all(G: GeodesicGraph, net, params: ExtensionParams) -> list:
    points = net.points if isinstance(net, EpsilonNet) else tuple(net)
    rows = [G.distances(p) for p in points]
    d = params.clamp
    return [tuple(retract_scalar(_div(min(r[v], d), d), params.eps) for r in rows)
            for v in range(G.n_nodes)]


def sup_dist(p, q):
    return max((abs(a - b) for a, b in zip(p, q)), default=0)


@dataclass(frozen=True)
class Extension:
    complex: CubeComplex
    census: dict
    n_samples: int
    sample_step: object
    net_alpha: object
    coordinate_faces: bool

    def to_dict(self) -> dict:
        from ._numeric import jsonable
        doc = self.complex.to_dict()
        doc.update({"census": {str(k): v for k, v in self.census.items()},
                    "dim": self.complex.dim,
                    "euler_characteristic": self.complex.euler_characteristic(),
                    "n_samples": self.n_samples,
                    "sample_step": jsonable(self.sample_step),
                    "net_alpha": jsonable(self.net_alpha),
                    "in_coordinate_faces": self.coordinate_faces})
        return doc


def extension_from_points(points, ambient_dim: int | None = None) -> CubeComplex:
    points = list(points)
    N = len(points[0]) if ambient_dim is None else ambient_dim
    return CubeComplex.closure(N, {minimal_face(p) for p in points})


def _faces_chunk(args):
    pts = args
    return sorted({minimal_face(p) for p in pts}, key=str)


def build_extension(V, g, G: GeodesicGraph, net, params: ExtensionParams, *, workers: int = 1) -> Extension:
    """Union of the minimal faces of ``J(v)`` over all graph nodes, closed under faces."""
    images = embed_all(G, net, params)
    for v, p in enumerate(images):
        if not any(x == 0 for x in p):
            raise NetTooSparse(f"J(node {v}) has no zero coordinate; the net is too sparse for eps",
                               node=v)
    size = max(1, len(images) // max(1, 4 * workers))
    chunks = [images[i:i + size] for i in range(0, len(images), size)]
    minimal = set()
    for part in pmap(_faces_chunk, chunks, workers=workers):
        minimal.update(part)
    N = len(images[0])
    K = CubeComplex.closure(N, minimal)
    alpha = net.alpha if isinstance(net, EpsilonNet) else None
    return Extension(K, K.census(), len(images), G.mesh_size, alpha, K.in_coordinate_faces())


# ----------------------------------------------------------------------------
# certificates


@dataclass(frozen=True)
class LipschitzReport:
    bound: object
    max_ratio: object
    pairs_checked: int
    violations: tuple


def lipschitz_report(G: GeodesicGraph, images, constant, pairs, tol: float = 1e-9) -> LipschitzReport:
    """Check ``|J(v) - J(w)|_inf <= constant * dist(v, w)`` on ``pairs``."""
    worst, bad, n = 0, [], 0
    for v, w in pairs:
        d = G.distances(v)[w]
        if d == 0:
            continue
        n += 1
        s = sup_dist(images[v], images[w])
        worst = max(worst, _div(s, d))
        if s > constant * d + (0 if G.exact else tol):
            bad.append((v, w))
    return LipschitzReport(constant, worst, n, tuple(bad))


@dataclass(frozen=True)
class InjectivityReport:
    threshold: object  # 2 eps
    min_far_separation: object
    near_collisions: tuple
    far_collisions: tuple
    shared_face_violations: tuple  # common zero coordinate yet dist > 2 eps
    pairs_checked: int

    @property
    def injective_on_samples(self) -> bool:
        return not self.far_collisions


def injectivity_check(G: GeodesicGraph, net, params: ExtensionParams, sample=None, *,
                      max_pairs: int | None = 20000, seed: int = 0) -> InjectivityReport:
    from .metric import sample_pairs

    images = embed_all(G, net, params)
    pairs = sample_pairs(G.n_nodes, max_pairs, seed) if sample is None else list(sample)
    thr = 2 * params.eps
    sep, near, far, shared = INF, [], [], []
    for v, w in pairs:
        d = G.distances(v)[w]
        s = sup_dist(images[v], images[w])
        if d >= thr:
            sep = min(sep, s)
            if s == 0:
                far.append((v, w))
        elif s == 0 and d > 0:
            near.append((v, w))
        if d > thr and any(a == 0 and b == 0 for a, b in zip(images[v], images[w])):
            shared.append((v, w))
    return InjectivityReport(thr, sep, tuple(near), tuple(far), tuple(shared), len(pairs))


def tube_retraction_check(K: CubeComplex, eps, points) -> list:
    """Points whose retraction leaves ``K``; the contract says none."""
    return [p for p in points if not K.contains_point(retract_complex(p, eps))]


def sample_tube(K: CubeComplex, eps, rng: random.Random, count: int) -> list:
    """Random points within sup-distance ``eps`` of cells of ``K``."""
    cells = K.sorted_cells()
    out = []
    for _ in range(count):
        c = rng.choice(cells)
        p = []
        for s in c.spec:
            base = rng.random() if s == FREE else float(s)
            x = base + rng.uniform(-eps, eps)
            p.append(min(1.0, max(0.0, x)))
        out.append(tuple(p))
    return out


# ----------------------------------------------------------------------------
# length metric on a cube complex


def _grid_graph(K: CubeComplex, level: int) -> dict:
    adj: dict = {}
    for c in K.maximal_cells():
        pts = list(c.grid_points(level))
        for z in pts:
            adj.setdefault(z, {})
        for a, b in itertools.combinations(pts, 2):
            w = Fraction(max(abs(x - y) for x, y in zip(a, b)), level)
            if w < adj[a].get(b, INF):
                adj[a][b] = w
                adj[b][a] = w
    return adj


def _dijkstra_dict(adj: dict, seeds: dict) -> dict:
    dist = dict(seeds)
    heap = [(d, z) for z, d in seeds.items()]
    heapq.heapify(heap)
    done = set()
    while heap:
        d, z = heapq.heappop(heap)
        if z in done:
            continue
        done.add(z)
        for y, w in adj.get(z, {}).items():
            nd = d + w
            if nd < dist.get(y, INF):
                dist[y] = nd
                heapq.heappush(heap, (nd, y))
    return dist


def _anchors(K: CubeComplex, p, level: int) -> dict:
    """Grid points sharing a cell with ``p`` and their sup-distance to it."""
    face = minimal_face(p)
    if face not in K.cells:
        raise PointNotInComplex(f"point {p} is not in the complex")
    out = {}
    for c in K.maximal_cells():
        if all(s == FREE or s == f for s, f in zip(c.spec, face.spec)):
            for z in c.grid_points(level):
                d = max(abs(Fraction(x) - Fraction(zi, level)) for x, zi in zip(p, z))
                if d < out.get(z, INF):
                    out[z] = d
    return out


def cube_distance(K: CubeComplex, p, q, level: int = 2):
    """Length metric induced by the sup norm, through a grid of ``level`` steps per unit."""
    if tuple(p) == tuple(q):
        if not K.contains_point(p):
            raise PointNotInComplex(f"point {p} is not in the complex")
        return 0
    adj = _grid_graph(K, level)
    src, dst = _anchors(K, p, level), _anchors(K, q, level)
    best = INF
    fp, fq = minimal_face(p), minimal_face(q)
    for c in K.maximal_cells():
        if all(s == FREE or (s == a and s == b) for s, a, b in zip(c.spec, fp.spec, fq.spec)):
            best = min(best, sup_dist([Fraction(x) for x in p], [Fraction(x) for x in q]))
    dist = _dijkstra_dict(adj, src)
    for z, d in dst.items():
        if z in dist:
            best = min(best, dist[z] + d)
    return normalize(best) if best != INF else INF


def face_distance(K: CubeComplex, c1: CubeCell, c2: CubeCell, level: int = 1):
    """Length-metric distance between two cells of ``K``."""
    for c in (c1, c2):
        if c not in K.cells:
            raise PointNotInComplex(f"cell {c} is not in the complex")
    adj = _grid_graph(K, level)
    dist = _dijkstra_dict(adj, {z: 0 for z in c1.grid_points(level)})
    best = min((dist.get(z, INF) for z in c2.grid_points(level)), default=INF)
    return normalize(best) if best != INF else INF


# ----------------------------------------------------------------------------
# periodic line model of a circle


@dataclass(frozen=True)
class PeriodicLineModel:
    """Universal cover of a circle with a periodic net, embedded coordinatewise.

    Lifted point ``x`` gets coordinate ``r_eps(min(1, |x - w|))`` for each
    lifted net point ``w`` in a finite window; net points farther than 1
    contribute a constant 1.
    """

    period: object = 2
    offsets: tuple = (0, Fraction(2, 3), Fraction(4, 3))
    eps: object = Fraction(1, 3)

    def net_points(self, lo, hi) -> list:
        out = []
        k = math.floor(Fraction(lo) / Fraction(self.period)) - 1
        while k * self.period <= hi + self.period:
            for o in self.offsets:
                w = normalize(k * Fraction(self.period) + Fraction(o))
                if lo <= w <= hi:
                    out.append(w)
            k += 1
        return sorted(out)

    def embed(self, x, window) -> tuple:
        return tuple(retract_scalar(min(1, abs(Fraction(x) - w)), self.eps) for w in window)

    def complex(self, lo, hi, step) -> tuple:
        """``(K, window)`` for samples ``lo, lo + step, ..., hi``."""
        window = self.net_points(lo - 1, hi + 1)
        n = int((Fraction(hi) - Fraction(lo)) / Fraction(step))
        pts = [self.embed(Fraction(lo) + i * Fraction(step), window) for i in range(n + 1)]
        return extension_from_points(pts, len(window)), window


@dataclass(frozen=True)
class FaceSeparationReport:
    m: int
    pairs_checked: int
    min_separation: object
    violations: tuple


def face_separation_check(model: PeriodicLineModel, m: int, *, step=Fraction(1, 30),
                          span=None, tol: float = 0) -> FaceSeparationReport:
    """Check ``dist(K(x), K(x')) >= m`` for lifted pairs with ``|x - x'| >= m``.

    Base points range over one period; partners over ``[x + m, x + m + span]``.
    """
    if m < 1:
        raise ValueError("m must be a positive integer")
    step = Fraction(step)
    span = Fraction(model.period) if span is None else Fraction(span)
    lo, hi = 0, Fraction(model.period) + m + span
    K, window = model.complex(lo, hi, step)
    adj = _grid_graph(K, 1)
    n_base = int(Fraction(model.period) / step)
    n_off = int(span / step)
    cache: dict = {}
    worst, bad, count = INF, [], 0
    for i in range(n_base):
        x = i * step
        c1 = minimal_face(model.embed(x, window))
        if c1 not in cache:
            cache[c1] = _dijkstra_dict(adj, {z: 0 for z in c1.grid_points(1)})
        dist = cache[c1]
        for j in range(n_off + 1):
            y = x + m + j * step
            c2 = minimal_face(model.embed(y, window))
            d = min((dist.get(z, INF) for z in c2.grid_points(1)), default=INF)
            count += 1
            worst = min(worst, d)
            if d < m - tol:
                bad.append((x, y, d))
    return FaceSeparationReport(m, count, normalize(worst) if worst != INF else INF, tuple(bad))


# ----------------------------------------------------------------------------
# image of a circle


def circle_order(G: GeodesicGraph) -> list:
    """Nodes of a one-dimensional geodesic graph in cyclic order from node 0."""
    if G.V.dim != 1:
        raise ValueError("circle_order needs a one-dimensional model")
    order, prev, cur = [0], None, 0
    while True:
        nbrs = sorted(b for b, _ in G.adj[cur])
        nxt = nbrs[0] if nbrs[0] != prev else nbrs[1]
        if nxt == 0:
            return order
        order.append(nxt)
        prev, cur = cur, nxt


def image_cycle(G: GeodesicGraph, net, params: ExtensionParams, phi):
    """Image loop ``J(V)`` as a circle with sup-norm edge lengths.

    Returns ``(V'', g'', phi'')``: one vertex per graph node, edge lengths
    ``|J(a) - J(b)|_inf`` (zero allowed), and ``phi`` pulled back along
    the arcs.
    """
    from .homotopy import arc_labels, element_to_word, gauge_fixed_homomorphism
    from .mesh import PLMetric, SimplicialComplex, validate_pseudomanifold

    order = circle_order(G)
    images = embed_all(G, net, params)
    labels = arc_labels(G, phi)
    m = len(order)
    edges, lengths, raw = [], {}, {}
    for i in range(m):
        a, b = order[i], order[(i + 1) % m]
        u, v = i, (i + 1) % m
        edges.append((u, v))
        lengths[(min(u, v), max(u, v))] = normalize(sup_dist(images[a], images[b]))
        el = next(e for y, _, e in labels[a] if y == b)
        raw[(u, v)] = element_to_word(phi.group, el)
    cx = SimplicialComplex.from_simplices(edges)
    V2 = validate_pseudomanifold(cx, 1)
    g2 = PLMetric.for_complex(cx, lengths, degenerate=True)
    return V2, g2, gauge_fixed_homomorphism(V2, phi.group, raw)
