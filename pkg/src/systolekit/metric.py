"""Discretized length metric of a PL pseudomanifold.

The geodesic graph has one node per point of the ``k``-fold barycentric
lattice of every top simplex, and an arc between any two nodes of a common
top simplex weighted by their flat distance. Graph distances bound the true
length metric from above.
"""
from __future__ import annotations

import csv
import heapq
import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ._numeric import is_exact, normalize
from .errors import DisconnectedPair, EmptySet
from .mesh import PLMetric, Pseudomanifold, simplex_coordinates, simplex_volume

INF = math.inf


def _compositions(total: int, parts: int):
    """All tuples of ``parts`` non-negative ints summing to ``total``."""
    for bars in itertools.combinations(range(total + parts - 1), parts - 1):
        prev, out = -1, []
        for b in bars:
            out.append(b - prev - 1)
            prev = b
        out.append(total + parts - 2 - prev)
        yield tuple(out)


def kuhn_subdivision(n: int, k: int) -> list[tuple]:
    """Barycentric weight vectors of the ``k^n`` sub-simplices of an ``n``-simplex.

    Each sub-simplex is a tuple of ``n + 1`` weight vectors (integers summing
    to ``k``); all sub-simplices have volume ``1 / k^n`` of the parent.
    """
    out = []
    for base in itertools.product(range(k), repeat=n):
        for perm in itertools.permutations(range(n)):
            z = list(base)
            verts = [tuple(z)]
            for axis in perm:
                z[axis] += 1
                verts.append(tuple(z))
            if all(k >= p[0] and all(p[i] >= p[i + 1] for i in range(n - 1)) and p[-1] >= 0
                   for p in verts):
                out.append(tuple(
                    (k - p[0],) + tuple(p[i] - p[i + 1] for i in range(n - 1)) + (p[-1],)
                    for p in verts))
    return out


@dataclass
class GeodesicGraph:
    V: Pseudomanifold
    g: PLMetric
    level: int
    nodes: list  # node id -> key ((vertex, weight), ...)
    index: dict  # key -> node id
    adj: list  # node id -> [(neighbour, length), ...]
    simplex_nodes: dict  # top simplex -> tuple of node ids
    exact: bool
    _cells: dict = field(default_factory=dict, repr=False)
    _dist_cache: dict = field(default_factory=dict, repr=False)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def vertex_nodes(self) -> dict:
        return {v: self.index[((v, self.level),)] for v in self.V.vertices}

    def node_of_vertex(self, v) -> int:
        return self.index[((v, self.level),)]

    def carrier(self, node: int) -> tuple:
        return tuple(v for v, _ in self.nodes[node])

    def arcs(self):
        for a, nbrs in enumerate(self.adj):
            for b, w in nbrs:
                if a < b:
                    yield a, b, w

    @property
    def mesh_size(self):
        """Longest arc joining lattice neighbours; the discretization slack."""
        longest = max(self.g.edge_lengths.values())
        return longest / self.level

    def distances(self, source: int) -> list:
        """Cached single-source distances."""
        hit = self._dist_cache.get(source)
        if hit is None:
            hit, _ = dijkstra(self, [source])
            self._dist_cache[source] = hit
        return hit

    def __getstate__(self):
        state = dict(self.__dict__)
        state["_dist_cache"] = {}
        return state


def build_geodesic_graph(V: Pseudomanifold, g: PLMetric, level: int = 4) -> GeodesicGraph:
    """Subdivide every top simplex ``level`` times and join nodes of common simplices."""
    if level < 1:
        raise ValueError("subdivision level must be >= 1")
    n = V.dim
    exact = n == 1 and g.exact
    keys = set()
    per_simplex = {}
    for s in V.top_simplices:
        weights = list(_compositions(level, n + 1))
        per_simplex[s] = weights
        for w in weights:
            keys.add(tuple((v, wi) for v, wi in zip(s, w) if wi > 0))
    vertex_keys = sorted(k for k in keys if len(k) == 1)
    other = sorted(k for k in keys if len(k) > 1)
    nodes = vertex_keys + other
    index = {k: i for i, k in enumerate(nodes)}

    arcs: dict = {}

    def add(a, b, w):
        key = (a, b) if a < b else (b, a)
        old = arcs.get(key)
        if old is None or w < old:
            arcs[key] = w

    simplex_nodes = {}
    for s, weights in per_simplex.items():
        ids = [index[tuple((v, wi) for v, wi in zip(s, w) if wi > 0)] for w in weights]
        simplex_nodes[s] = tuple(ids)
        if n == 1:
            step = g.length(*s)
            step = normalize(Fraction(step) / level) if exact else step / level
            by_pos = sorted(zip((w[1] for w in weights), ids))
            for (_, a), (_, b) in zip(by_pos, by_pos[1:]):
                add(a, b, step)
        else:
            X = simplex_coordinates(s, g)
            W = np.array(weights, dtype=float) / level
            P = W @ X
            D = np.sqrt(((P[:, None, :] - P[None, :, :]) ** 2).sum(-1))
            for i, j in itertools.combinations(range(len(ids)), 2):
                add(ids[i], ids[j], float(D[i, j]))

    adj: list = [[] for _ in nodes]
    for (a, b), w in sorted(arcs.items()):
        adj[a].append((b, w))
        adj[b].append((a, w))
    return GeodesicGraph(V, g, level, nodes, index, adj, simplex_nodes, exact)


def dijkstra(G: GeodesicGraph, sources, cutoff=None, seeds=None):
    """Multi-source shortest paths.

    ``seeds`` optionally gives starting offsets per source. Nodes farther
    than ``cutoff`` are left at infinity. Returns ``(dist, parent)``.
    """
    dist = [INF] * G.n_nodes
    parent = [-1] * G.n_nodes
    heap = []
    for i, s in enumerate(sources):
        d0 = 0 if seeds is None else seeds[i]
        if d0 < dist[s]:
            dist[s] = d0
            heapq.heappush(heap, (d0, s))
    done = [False] * G.n_nodes
    while heap:
        d, a = heapq.heappop(heap)
        if done[a]:
            continue
        done[a] = True
        for b, w in G.adj[a]:
            nd = d + w
            if cutoff is not None and nd > cutoff:
                continue
            if nd < dist[b]:
                dist[b] = nd
                parent[b] = a
                heapq.heappush(heap, (nd, b))
    return dist, parent


def distance(G: GeodesicGraph, v: int, w: int):
    """Shortest-path distance between two nodes."""
    if v == w:
        return 0
    d = G.distances(v)[w]
    if d == INF:
        raise DisconnectedPair(f"nodes {v} and {w} are not connected")
    return d


def distance_matrix(G: GeodesicGraph, nodes=None) -> list:
    """Rows of distances from ``nodes`` (default: all nodes)."""
    nodes = range(G.n_nodes) if nodes is None else nodes
    return [G.distances(v) for v in nodes]


# ----------------------------------------------------------------------------
# balls


@dataclass(frozen=True)
class BallGrowthProfile:
    center: int
    radii: tuple
    volumes: tuple
    error_bounds: tuple
    total_volume: object
    level: int

    def rows(self):
        return list(zip(self.radii, self.volumes, self.error_bounds))


def _cells(G: GeodesicGraph, s: tuple):
    """Sub-simplices of top simplex ``s``: (vertex node ids, bary->node offsets)."""
    hit = G._cells.get(s)
    if hit is not None:
        return hit
    n, k = G.V.dim, G.level
    ids = G.simplex_nodes[s]
    weights = list(_compositions(k, n + 1))
    node_of = {w: i for w, i in zip(weights, ids)}
    subs = kuhn_subdivision(n, k)
    vert_ids = [tuple(node_of[w] for w in sub) for sub in subs]
    if G.exact:
        length = Fraction(G.g.length(*s))
        pos = [Fraction(w[1], k) * length for w in weights]
        bary = [sum(Fraction(w[1], k) for w in sub) / (n + 1) * length for sub in subs]
        offsets = [[abs(b - p) for p in pos] for b in bary]
    else:
        X = simplex_coordinates(s, G.g)
        P = (np.array(weights, dtype=float) / k) @ X
        B = np.array([np.mean(np.array(sub, dtype=float), axis=0) / k for sub in subs]) @ X
        offsets = np.sqrt(((B[:, None, :] - P[None, :, :]) ** 2).sum(-1))
    hit = (ids, vert_ids, offsets)
    G._cells[s] = hit
    return hit


def cell_distance_field(G: GeodesicGraph, dist: list):
    """Distance to each sub-simplex barycenter and the range over its vertices.

    Returns a list of ``(volume, barycenter distance, lo, hi)``.
    """
    k, n = G.level, G.V.dim
    out = []
    for s in G.V.top_simplices:
        vol = simplex_volume(s, G.g)
        sub_vol = (Fraction(vol) / k ** n) if G.exact else vol / k ** n
        ids, vert_ids, offsets = _cells(G, s)
        if G.exact:
            dn = [dist[i] for i in ids]
            bdist = [min(d + o for d, o in zip(dn, row)) for row in offsets]
        else:
            dn = np.array([dist[i] for i in ids], dtype=float)
            bdist = (dn[None, :] + offsets).min(axis=1).tolist()
        for bd, verts in zip(bdist, vert_ids):
            vd = [dist[i] for i in verts]
            out.append((sub_vol, bd, min(min(vd), bd), max(max(vd), bd)))
    return out


def ball_volume_profile(V: Pseudomanifold, g: PLMetric, G: GeodesicGraph, center: int,
                        radii) -> BallGrowthProfile:
    """Volumes of closed balls ``B(center, R)`` for increasing ``radii``.

    A sub-simplex counts toward the ball when its barycenter is within ``R``.
    The error bound per radius is the number of sub-simplices straddling the
    sphere times the largest sub-simplex volume.
    """
    radii = tuple(radii)
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be strictly increasing")
    if V.dim == 1:
        return _arc_ball_profile(G, center, radii)
    field_ = cell_distance_field(G, G.distances(center))
    max_sub = max(c[0] for c in field_)
    total = sum(c[0] for c in field_)
    volumes, errors = [], []
    for R in radii:
        vol, straddle = 0, 0
        for sub_vol, bd, lo, hi in field_:
            if bd <= R:
                vol += sub_vol
            if lo <= R < hi:
                straddle += 1
        volumes.append(normalize(vol) if is_exact(vol) else vol)
        errors.append(normalize(straddle * max_sub) if is_exact(max_sub) else straddle * max_sub)
    total = normalize(total) if is_exact(total) else total
    return BallGrowthProfile(center, radii, tuple(volumes), tuple(errors), total, G.level)


def _arc_ball_profile(G: GeodesicGraph, center: int, radii) -> BallGrowthProfile:
    # on a graph the distance along an arc is min(d0 + t, d1 + w - t), so the
    # ball meets each arc in two end segments of total length min(w, a + b)
    dist = G.distances(center)
    arcs = list(G.arcs())
    volumes = []
    for R in radii:
        vol = 0
        for a, b, w in arcs:
            lo = min(max(R - dist[a], 0), w)
            hi = min(max(R - dist[b], 0), w)
            vol += min(w, lo + hi)
        volumes.append(normalize(vol) if is_exact(vol) else vol)
    total = sum(w for _, _, w in arcs)
    total = normalize(total) if is_exact(total) else total
    return BallGrowthProfile(center, radii, tuple(volumes), (0,) * len(radii), total, G.level)


def write_profile_csv(stream, rows) -> None:
    """CSV with columns radius,volume,lower_bound,verdict."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["radius", "volume", "lower_bound", "verdict"])
    for radius, volume, lower, verdict in rows:
        writer.writerow([repr(float(radius)), repr(float(volume)), repr(float(lower)), verdict])


# ----------------------------------------------------------------------------
# nets


@dataclass(frozen=True)
class EpsilonNet:
    points: tuple
    alpha: object  # achieved covering radius
    packing_radius: object
    requested_alpha: object = None

    def to_dict(self) -> dict:
        from ._numeric import jsonable
        return {"nodes": list(self.points), "alpha": jsonable(self.alpha),
                "packing_radius": jsonable(self.packing_radius)}


def covering_radius(G: GeodesicGraph, points) -> object:
    points = list(points)
    if not points:
        raise EmptySet("empty point set")
    dist, _ = dijkstra(G, points)
    return max(dist)


def is_alpha_dense(G: GeodesicGraph, points, alpha) -> bool:
    """Closed-tube density: every node within ``alpha`` of some point."""
    return covering_radius(G, points) <= alpha


def make_net(G: GeodesicGraph, points, requested_alpha=None) -> EpsilonNet:
    points = tuple(points)
    alpha = covering_radius(G, points)
    if len(points) > 1:
        half = min(G.distances(a)[b] for a, b in itertools.combinations(points, 2))
        packing = normalize(Fraction(half) / 2) if is_exact(half) else half / 2
    else:
        packing = INF
    return EpsilonNet(points, alpha, packing, requested_alpha)


def alpha_dense_net(G: GeodesicGraph, alpha) -> EpsilonNet:
    """Greedy farthest-point net with covering radius at most ``alpha``.

    Starts at node 0; ties go to the lowest node index.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    points = [0]
    nearest = list(G.distances(0))
    while True:
        far = max(nearest)
        if far <= alpha:
            break
        nxt = nearest.index(far)
        points.append(nxt)
        nearest = [min(a, b) for a, b in zip(nearest, G.distances(nxt))]
    return make_net(G, points, alpha)


# ----------------------------------------------------------------------------
# Hausdorff distance and distortion


def hausdorff_distance(A, B, metric) -> object:
    """Hausdorff distance between finite sets.

    ``metric`` is a :class:`GeodesicGraph` (``A``, ``B`` are node ids) or a
    callable ``d(a, b)``. Closed tubes are used, so the infimum is attained.
    """
    A, B = list(A), list(B)
    if not A or not B:
        raise EmptySet("Hausdorff distance needs nonempty sets")
    if isinstance(metric, GeodesicGraph):
        dA, _ = dijkstra(metric, A)
        dB, _ = dijkstra(metric, B)
        return max(max(dA[b] for b in B), max(dB[a] for a in A))
    ab = max(min(metric(a, b) for b in B) for a in A)
    ba = max(min(metric(a, b) for a in A) for b in B)
    return max(ab, ba)


@dataclass(frozen=True)
class DistortionReport:
    eta: object  # max additive distortion over checked pairs
    pairs_checked: int
    upper_bound_violations: tuple  # ((v, w, dist, sup-norm), ...)
    pair_cutoff: object

    @property
    def upper_bound_holds(self) -> bool:
        return not self.upper_bound_violations


def kuratowski_coordinates(G: GeodesicGraph, net_points, clamp=1) -> list:
    """Per node, the tuple ``min(dist(v, v_i), clamp)`` over net points."""
    rows = [G.distances(p) for p in net_points]
    return [tuple(min(r[v], clamp) for r in rows) for v in range(G.n_nodes)]


def sample_pairs(n_nodes: int, max_pairs: int | None, seed: int = 0) -> list:
    total = n_nodes * (n_nodes - 1) // 2
    if max_pairs is None or total <= max_pairs:
        return list(itertools.combinations(range(n_nodes), 2))
    rng = random.Random(seed)
    seen = set()
    while len(seen) < max_pairs:
        a, b = rng.randrange(n_nodes), rng.randrange(n_nodes)
        if a != b:
            seen.add((min(a, b), max(a, b)))
    return sorted(seen)


def net_distortion_report(G: GeodesicGraph, net, pairs=None, *, max_pairs: int | None = 20000,
                          seed: int = 0, cutoff=Fraction(1, 2), tol: float = 1e-12) -> DistortionReport:
    """Additive distortion of the clamped distance coordinates on close pairs.

    Checks ``dist - eta <= |I(v) - I(w)|_inf <= dist`` over pairs with
    ``dist < cutoff``; the upper bound must hold on every pair.
    """
    points = net.points if isinstance(net, EpsilonNet) else tuple(net)
    coords = kuratowski_coordinates(G, points)
    if pairs is None:
        pairs = sample_pairs(G.n_nodes, max_pairs, seed)
    eta, checked, bad = 0, 0, []
    slack = 0 if G.exact else tol
    for v, w in pairs:
        d = G.distances(v)[w]
        if not d < cutoff:
            continue
        checked += 1
        sup = max((abs(a - b) for a, b in zip(coords[v], coords[w])), default=0)
        if sup > d + slack:
            bad.append((v, w, d, sup))
        if d - sup > eta:
            eta = d - sup
    return DistortionReport(eta, checked, tuple(bad), cutoff)
