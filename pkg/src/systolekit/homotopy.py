"""Relative systoles through edge-word homomorphisms.

A map ``f: V -> K(pi, 1)`` only enters through ``f_*`` on fundamental groups,
so it is stored as a word in ``pi`` per oriented edge, with the edges of a
spanning tree sent to the identity. Loops in the geodesic graph inherit
words through the lowest vertex of each node's carrier.
"""
from __future__ import annotations

import heapq
import itertools
import json
import re
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable

from ._numeric import is_exact, normalize
from ._parallel import pmap
from .errors import (InfiniteSystole, InvalidHomomorphism, InvalidPresentation,
                     SearchCutoffExceeded, UndecidableOracle)
from .mesh import Pseudomanifold, edge_key, total_volume
from .metric import INF, GeodesicGraph, dijkstra

Word = tuple  # signed 1-based generator indices; -i is the inverse of generator i

ORACLES = ("free", "free_abelian", "custom")
_TOKEN = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)(?:\^(-?\d+))?$")


def reduce_word(w) -> Word:
    """Free reduction."""
    out: list = []
    for x in w:
        if out and out[-1] == -x:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


def inverse_word(w) -> Word:
    return tuple(-x for x in reversed(w))


def _is_commutator(w: Word) -> bool:
    return len(w) == 4 and w[2] == -w[0] and w[3] == -w[1] and abs(w[0]) != abs(w[1])


@dataclass(frozen=True)
class GroupPresentation:
    generators: tuple
    relators: tuple = ()
    oracle_kind: str = "free"
    decide: Callable | None = field(default=None, compare=False)

    def __post_init__(self):
        gens = tuple(self.generators)
        if len(set(gens)) != len(gens) or not all(isinstance(g, str) and _TOKEN.match(g) for g in gens):
            raise InvalidPresentation(f"bad generator list {gens!r}")
        object.__setattr__(self, "generators", gens)
        if self.oracle_kind not in ORACLES:
            raise InvalidPresentation(f"unknown oracle {self.oracle_kind!r}")
        rels = tuple(reduce_word(self.parse_word(r) if isinstance(r, str) else r) for r in self.relators)
        for r in rels:
            if any(not 1 <= abs(x) <= self.rank for x in r):
                raise InvalidPresentation(f"relator {r} uses unknown generators")
        if self.oracle_kind == "free" and any(rels):
            raise InvalidPresentation("a free group has no relators")
        if self.oracle_kind == "free_abelian" and not all(_is_commutator(r) for r in rels if r):
            raise InvalidPresentation("free abelian relators must be commutators")
        object.__setattr__(self, "relators", tuple(r for r in rels if r))

    @property
    def rank(self) -> int:
        return len(self.generators)

    @property
    def canonical(self) -> bool:
        """Whether elements have a computable normal form."""
        return self.oracle_kind != "custom"

    # words -------------------------------------------------------------

    def parse_word(self, text: str) -> Word:
        out = []
        for tok in text.replace("*", " ").split():
            if tok == "1":
                continue
            m = _TOKEN.match(tok)
            if not m or m.group(1) not in self.generators:
                raise InvalidHomomorphism(f"cannot parse word token {tok!r}")
            g = self.generators.index(m.group(1)) + 1
            e = int(m.group(2) or 1)
            out += [g if e > 0 else -g] * abs(e)
        return reduce_word(out)

    def format_word(self, w) -> str:
        w = reduce_word(w)
        if not w:
            return "1"
        parts, i = [], 0
        while i < len(w):
            j = i
            while j < len(w) and w[j] == w[i]:
                j += 1
            e = (j - i) * (1 if w[i] > 0 else -1)
            name = self.generators[abs(w[i]) - 1]
            parts.append(name if e == 1 else f"{name}^{e}")
            i = j
        return " ".join(parts)

    # elements ----------------------------------------------------------

    @property
    def identity(self):
        return (0,) * self.rank if self.oracle_kind == "free_abelian" else ()

    def element(self, w):
        """Normal form of a word: reduced word, or exponent vector when abelian."""
        if self.oracle_kind == "free_abelian":
            vec = [0] * self.rank
            for x in w:
                vec[abs(x) - 1] += 1 if x > 0 else -1
            return tuple(vec)
        return reduce_word(w)

    def mul(self, x, y):
        if self.oracle_kind == "free_abelian":
            return tuple(a + b for a, b in zip(x, y))
        return reduce_word(x + y)

    def inv(self, x):
        if self.oracle_kind == "free_abelian":
            return tuple(-a for a in x)
        return inverse_word(x)

    def is_trivial_element(self, x) -> bool:
        if self.oracle_kind == "free_abelian":
            return not any(x)
        if self.oracle_kind == "free":
            return not x
        if not x:
            return True
        if self.decide is None:
            raise UndecidableOracle("custom group without a decision routine")
        return bool(self.decide(x))

    def to_dict(self) -> dict:
        return {"generators": list(self.generators),
                "relators": [self.format_word(r) for r in self.relators],
                "oracle": self.oracle_kind}


def word_is_trivial(pi: GroupPresentation, w) -> bool:
    """Decide ``w = 1`` in ``pi``; ``w`` may be a word tuple or a string."""
    if isinstance(w, str):
        w = pi.parse_word(w)
    return pi.is_trivial_element(pi.element(w))


def element_to_word(pi: GroupPresentation, x) -> Word:
    """A word representing the normal form ``x``."""
    if pi.oracle_kind == "free_abelian":
        return tuple(itertools.chain.from_iterable(
            [i + 1 if e > 0 else -(i + 1)] * abs(e) for i, e in enumerate(x)))
    return tuple(x)


def presentation_from_dict(doc: dict) -> GroupPresentation:
    try:
        return GroupPresentation(tuple(doc["generators"]), tuple(doc.get("relators", ())),
                                 doc.get("oracle", doc.get("oracle_kind", "free")))
    except (KeyError, TypeError) as exc:
        raise InvalidPresentation(f"malformed presentation: {exc}") from exc


def free_group(rank: int) -> GroupPresentation:
    return GroupPresentation(tuple("abcdefghijklmnopqrstuvwxyz"[:rank]))


def free_abelian_group(rank: int) -> GroupPresentation:
    gens = tuple("abcdefghijklmnopqrstuvwxyz"[:rank])
    rels = tuple((i, j, -i, -j) for i in range(1, rank + 1) for j in range(i + 1, rank + 1))
    return GroupPresentation(gens, rels, "free_abelian")


# ----------------------------------------------------------------------------
# homomorphisms


@dataclass(frozen=True)
class EdgeHomomorphism:
    group: GroupPresentation
    spanning_tree: frozenset
    edge_words: dict  # (u, v) with u < v -> word read from u to v
    normality: str = "assumed"  # "verified" | "not_surjective" | "assumed"

    def word(self, u, v) -> Word:
        if u == v:
            return ()
        w = self.edge_words.get(edge_key(u, v), ())
        return w if u < v else inverse_word(w)

    def element(self, u, v):
        return self.group.element(self.word(u, v))

    @property
    def is_trivial(self) -> bool:
        return all(self.group.is_trivial_element(self.group.element(w)) for w in self.edge_words.values())

    def to_dict(self) -> dict:
        return {"presentation": self.group.to_dict(),
                "tree_edges": [list(e) for e in sorted(self.spanning_tree)],
                "edge_words": {f"{u}-{v}": self.group.format_word(w)
                               for (u, v), w in sorted(self.edge_words.items())},
                "normality": self.normality}


def bfs_tree(V: Pseudomanifold) -> frozenset:
    adj: dict = {v: [] for v in V.vertices}
    for u, v in V.complex.edges:
        adj[u].append(v)
        adj[v].append(u)
    root = V.vertices[0]
    seen, tree, queue = {root}, set(), deque([root])
    while queue:
        u = queue.popleft()
        for v in sorted(adj[u]):
            if v not in seen:
                seen.add(v)
                tree.add(edge_key(u, v))
                queue.append(v)
    return frozenset(tree)


def _check_tree(V: Pseudomanifold, tree) -> None:
    edges = set(V.complex.edges)
    for e in tree:
        if e not in edges:
            raise InvalidHomomorphism(f"tree edge {e} is not an edge of the complex", edge=e)
    verts = V.vertices
    if len(tree) != len(verts) - 1:
        raise InvalidHomomorphism(f"tree has {len(tree)} edges, a spanning tree needs {len(verts) - 1}")
    parent = {v: v for v in verts}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in tree:
        ru, rv = find(u), find(v)
        if ru == rv:
            raise InvalidHomomorphism(f"tree edges contain a cycle through {(u, v)}", edge=(u, v))
        parent[ru] = rv


def _normality(group: GroupPresentation, words) -> str:
    # the free group of rank 1 is Z, so the abelian check applies to it too
    cyclic = group.oracle_kind == "free" and group.rank == 1
    if group.oracle_kind != "free_abelian" and not cyclic:
        return "assumed"
    from sympy import Matrix, ZZ
    from sympy.matrices.normalforms import invariant_factors

    vecs = [(sum(1 if x > 0 else -1 for x in w),) if cyclic else group.element(w) for w in words]
    vecs = [v for v in vecs if any(v)]
    if len(vecs) < group.rank:
        return "not_surjective"
    factors = invariant_factors(Matrix(vecs).T, domain=ZZ)
    ok = len(factors) == group.rank and all(abs(int(f)) == 1 for f in factors)
    return "verified" if ok else "not_surjective"


def make_homomorphism(V: Pseudomanifold, group: GroupPresentation, tree_edges, edge_words) -> EdgeHomomorphism:
    """Validate a tree plus non-tree edge words.

    ``edge_words`` maps ``(u, v)`` (read from ``u`` to ``v``) to a word tuple
    or string. Non-tree edges without a word map to the identity.
    """
    tree = frozenset(edge_key(*e) for e in tree_edges)
    _check_tree(V, tree)
    edges = set(V.complex.edges)
    table: dict = {}
    for (u, v), w in edge_words.items():
        if isinstance(w, str):
            w = group.parse_word(w)
        w = reduce_word(w)
        key = edge_key(u, v)
        if key not in edges:
            raise InvalidHomomorphism(f"edge word on {key}, which is not an edge", edge=key)
        if key in tree:
            if not group.is_trivial_element(group.element(w)):
                raise InvalidHomomorphism(f"tree edge {key} must map to the identity", edge=key)
            continue
        if any(not 1 <= abs(x) <= group.rank for x in w):
            raise InvalidHomomorphism(f"word on {key} uses unknown generators", edge=key)
        if key in table:
            raise InvalidHomomorphism(f"edge {key} given twice", edge=key)
        table[key] = w if (u, v) == key else inverse_word(w)
    phi = EdgeHomomorphism(group, tree, {k: w for k, w in sorted(table.items()) if w})
    for a, b, c in V.complex.of_dim(2):
        loop = phi.word(a, b) + phi.word(b, c) + phi.word(c, a)
        if not group.is_trivial_element(group.element(loop)):
            raise InvalidHomomorphism(f"edge words are not a cocycle on triangle {(a, b, c)}",
                                      simplex=(a, b, c))
    return EdgeHomomorphism(group, tree, phi.edge_words, _normality(group, phi.edge_words.values()))


def gauge_fixed_homomorphism(V: Pseudomanifold, group: GroupPresentation, raw_words,
                             tree_edges=None) -> EdgeHomomorphism:
    """Homomorphism from arbitrary edge labels, rewritten so tree edges are trivial.

    Each vertex gets the potential ``P(v)`` (product of labels along its tree
    path) and edge ``u -> v`` becomes ``P(u) raw(u, v) P(v)^-1``.
    """
    raw = {}
    for (u, v), w in raw_words.items():
        w = group.parse_word(w) if isinstance(w, str) else tuple(w)
        key = edge_key(u, v)
        raw[key] = w if (u, v) == key else inverse_word(w)

    def raw_word(u, v):
        w = raw.get(edge_key(u, v), ())
        return w if u < v else inverse_word(w)

    tree = bfs_tree(V) if tree_edges is None else frozenset(edge_key(*e) for e in tree_edges)
    _check_tree(V, tree)
    adj: dict = {v: [] for v in V.vertices}
    for u, v in tree:
        adj[u].append(v)
        adj[v].append(u)
    root = V.vertices[0]
    pot = {root: ()}
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for v in sorted(adj[u]):
            if v not in pot:
                pot[v] = reduce_word(pot[u] + raw_word(u, v))
                queue.append(v)
    words = {}
    for u, v in V.complex.edges:
        if (u, v) not in tree:
            words[(u, v)] = reduce_word(pot[u] + raw_word(u, v) + inverse_word(pot[v]))
    return make_homomorphism(V, group, tree, words)


def homomorphism_from_dict(V: Pseudomanifold, doc: dict, group: GroupPresentation | None = None
                           ) -> EdgeHomomorphism:
    """Parse ``{"tree_edges", "edge_words": {"u-v": word}}``.

    The document may embed a ``"presentation"``. Without ``tree_edges`` the
    words are read as raw labels on all edges and gauge-fixed on a BFS tree.
    """
    if "presentation" in doc:
        group = presentation_from_dict(doc["presentation"])
    if group is None:
        raise InvalidPresentation("no group presentation given")
    words = {}
    for key, w in doc.get("edge_words", {}).items():
        try:
            u, v = (int(x) for x in key.split("-"))
        except ValueError:
            raise InvalidHomomorphism(f"bad edge key {key!r}; expected 'u-v'") from None
        words[(u, v)] = w
    if "tree_edges" not in doc:
        return gauge_fixed_homomorphism(V, group, words)
    return make_homomorphism(V, group, [tuple(e) for e in doc["tree_edges"]], words)


def load_homomorphism(V: Pseudomanifold, path, group: GroupPresentation | None = None) -> EdgeHomomorphism:
    return homomorphism_from_dict(V, json.loads(Path(path).read_text()), group)


def circle_homomorphism(V: Pseudomanifold) -> EdgeHomomorphism:
    """Isomorphism onto Z = <a> for a circle on vertices ``0..m-1``."""
    m = len(V.vertices)
    return gauge_fixed_homomorphism(V, free_group(1), {(m - 1, 0): (1,)})


def torus_homomorphism(V: Pseudomanifold, m: int, p: int | None = None, *,
                       project: int | None = None) -> EdgeHomomorphism:
    """Isomorphism onto Z^2 for :func:`~systolekit.mesh.flat_torus_mesh` grids.

    ``project=0`` (or 1) keeps only the first (or second) factor, mapping onto Z.
    """
    p = m if p is None else p
    raw = {}
    for u, v in V.complex.edges:
        (iu, ju), (iv, jv) = divmod(u, p), divmod(v, p)
        di, dj = iv - iu, jv - ju
        w = ()
        if abs(di) > 1:
            w += (1,) if di < 0 else (-1,)
        if abs(dj) > 1:
            w += (2,) if dj < 0 else (-2,)
        if project is not None:
            w = tuple(1 if x > 0 else -1 for x in w if abs(x) == project + 1)
        if w:
            raw[(u, v)] = w
    group = free_abelian_group(2) if project is None else free_abelian_group(1)
    return gauge_fixed_homomorphism(V, group, raw)


# ----------------------------------------------------------------------------
# systoles


def _ref(G: GeodesicGraph, node: int):
    return G.nodes[node][0][0]


def arc_labels(G: GeodesicGraph, phi: EdgeHomomorphism) -> list:
    """Per node, ``[(neighbour, length, element), ...]`` with arc group labels."""
    grp = phi.group
    refs = [_ref(G, i) for i in range(G.n_nodes)]
    cache: dict = {}
    out = []
    for a, nbrs in enumerate(G.adj):
        row = []
        for b, w in nbrs:
            key = (refs[a], refs[b])
            if key not in cache:
                cache[key] = grp.element(phi.word(*key))
            row.append((b, w, cache[key]))
        out.append(row)
    return out


@dataclass(frozen=True)
class SystoleResult:
    value: object
    base: int | None = None
    element: object = None  # group element of the minimizing loop
    arc: tuple | None = None
    level: int | None = None

    @property
    def finite(self) -> bool:
        return self.value != INF


def _pointwise(G: GeodesicGraph, phi: EdgeHomomorphism, labels, base: int, cutoff=None) -> SystoleResult:
    """Shortest nontrivial loop at ``base``: two tree paths plus one arc."""
    grp = phi.group
    half = None
    if cutoff is not None and cutoff != INF:
        half = normalize(Fraction(cutoff) / 2) if is_exact(cutoff) else cutoff / 2
    dist, parent = dijkstra(G, [base], cutoff=half)
    order = sorted((d, i) for i, d in enumerate(dist) if d != INF)
    lab: dict = {base: grp.identity}
    for _, x in order:
        if x == base:
            continue
        p = parent[x]
        for b, _, el in labels[p]:
            if b == x:
                lab[x] = grp.mul(lab[p], el)
                break
    best = None  # (length, x, y, element) with x < y
    bound = INF if cutoff is None else cutoff
    for _, x in order:
        for y, w, el in labels[x]:
            if y < x or y not in lab or parent[y] == x or parent[x] == y:
                continue
            cand = dist[x] + w + dist[y]
            if cand > bound or (best is not None and (cand, x, y) >= best[:3]):
                continue
            loop = grp.mul(grp.mul(lab[x], el), grp.inv(lab[y]))
            if not grp.is_trivial_element(loop):
                best = (cand, x, y, loop)
    if best is None:
        return SystoleResult(INF, base, None, None, G.level)
    return SystoleResult(best[0], base, best[3], (best[1], best[2]), G.level)


def _batch(args):
    G, phi, bases, cutoff = args
    labels = arc_labels(G, phi)
    return [_pointwise(G, phi, labels, b, cutoff) for b in bases]


def pointwise_systole(V, g, G: GeodesicGraph, phi: EdgeHomomorphism, v: int) -> object:
    """Length of the shortest loop based at node ``v`` with nontrivial image."""
    return _pointwise(G, phi, arc_labels(G, phi), v).value


def systole_search(G: GeodesicGraph, phi: EdgeHomomorphism, *, max_radius=None,
                   workers: int = 1) -> SystoleResult:
    """Minimum over base nodes of the pointwise systole.

    The first base fixes a pruning bound shared by all other bases, so the
    answer does not depend on how bases are split across workers.
    """
    labels = arc_labels(G, phi)
    first = _pointwise(G, phi, labels, 0, max_radius)
    if not first.finite:
        if max_radius is not None and not phi.is_trivial:
            raise SearchCutoffExceeded(f"no nontrivial loop of length <= {max_radius}",
                                       lower_bound=max_radius)
        return first
    bases = list(range(1, G.n_nodes))
    n_chunks = max(1, min(len(bases), 4 * max(1, workers)))
    chunks = [bases[i::n_chunks] for i in range(n_chunks)]
    results = [first]
    for part in pmap(_batch, [(G, phi, c, first.value) for c in chunks], workers=workers):
        results += part
    best = first
    for r in results:
        if r.finite and (r.value < best.value or (r.value == best.value and r.base < best.base)):
            best = r
    return best


def relative_systole(V, g, G: GeodesicGraph, phi: EdgeHomomorphism, *, max_radius=None,
                     workers: int = 1) -> object:
    """Discrete relative systole; ``math.inf`` when ``phi`` kills every loop."""
    return systole_search(G, phi, max_radius=max_radius, workers=workers).value


def systolic_ratio(V, g, G: GeodesicGraph, phi: EdgeHomomorphism, *, workers: int = 1) -> object:
    sys_ = relative_systole(V, g, G, phi, workers=workers)
    if sys_ == INF:
        raise InfiniteSystole("systole is infinite; the ratio is undefined")
    vol = total_volume(V, g)
    if is_exact(vol) and is_exact(sys_):
        return normalize(Fraction(vol) / Fraction(sys_) ** V.dim)
    return vol / sys_ ** V.dim


# ----------------------------------------------------------------------------
# covering balls


@dataclass(frozen=True)
class CoveringBall:
    base_node: int
    radius: object
    lifted_nodes: dict  # (node, element) -> distance from (base, start)
    deck_translates: dict  # element != 1 -> distance to (base, element)
    start: object = None
    group: GroupPresentation | None = None

    def field(self):
        """Distances keyed by (node, start^-1 * element): comparable across starts."""
        if self.group is None or self.start is None:
            return dict(self.lifted_nodes)
        shift = self.group.inv(self.start)
        return {(x, self.group.mul(shift, el)): d for (x, el), d in self.lifted_nodes.items()}


def covering_ball(G: GeodesicGraph, phi: EdgeHomomorphism, base: int, radius=None,
                  start=None) -> CoveringBall:
    """Lift Dijkstra to the covering of ``ker phi`` from ``(base, start)``.

    Without ``radius`` the exploration stops at three times the first deck
    translate found.
    """
    grp = phi.group
    if not grp.canonical:
        raise UndecidableOracle("covering balls need a group with normal forms")
    labels = arc_labels(G, phi)
    start = grp.identity if start is None else start
    limit = radius
    dist = {(base, start): 0}
    heap = [(0, 0, base, start)]
    tick = 1
    done = set()
    deck: dict = {}
    while heap:
        d, _, x, el = heapq.heappop(heap)
        if (x, el) in done:
            continue
        if limit is not None and d > limit:
            break
        done.add((x, el))
        if x == base and el != start:
            rel = grp.mul(grp.inv(start), el)
            deck.setdefault(rel, d)
            if limit is None:
                limit = 3 * d
        for y, w, lab in labels[x]:
            nd = d + w
            if limit is not None and nd > limit:
                continue
            st = (y, grp.mul(el, lab))
            if nd < dist.get(st, INF):
                dist[st] = nd
                heapq.heappush(heap, (nd, tick, y, st[1]))
                tick += 1
    lifted = {k: v for k, v in dist.items() if k in done}
    return CoveringBall(base, limit, lifted, deck, start, grp)


def covering_systole(G: GeodesicGraph, phi: EdgeHomomorphism, bases=None) -> object:
    """``min d(v~, gamma v~)`` over bases and nontrivial deck translates."""
    best = INF
    for b in range(G.n_nodes) if bases is None else bases:
        ball = covering_ball(G, phi, b)
        if ball.deck_translates:
            best = min(best, min(ball.deck_translates.values()))
    return best
