from __future__ import annotations

import io
import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from systolekit.errors import EmptySet
from systolekit.mesh import flat_torus_mesh
from systolekit.metric import (
    alpha_dense_net,
    ball_volume_profile,
    build_geodesic_graph,
    covering_radius,
    dijkstra,
    distance,
    distance_matrix,
    hausdorff_distance,
    is_alpha_dense,
    make_net,
    net_distortion_report,
    write_profile_csv,
)

from conftest import circle_model


def node_order(G):
    """Position of each node along a circle mesh, counted in arcs from node 0."""
    # walk the cycle from node 0 through its lower-index neighbour of vertex 1
    order = {0: 0}
    start = next(w for w, _ in G.adj[0] if G.carrier(w) == (0, 1) or w == G.node_of_vertex(1))
    prev, cur = 0, start
    while cur != 0:
        order[cur] = len(order)
        nxt = [w for w, _ in G.adj[cur] if w != prev]
        prev, cur = cur, nxt[0]
    return order


def circle_oracle(x, y, perimeter):
    d = abs(x - y) % perimeter
    return min(d, perimeter - d)


def test_circle_twelve_arcs_half_apart():
    V, g, G, _ = circle_model(1, 12, 1)
    assert distance(G, 0, 6) == Fraction(1, 2)
    assert distance(G, 3, 3) == 0


@pytest.mark.parametrize("perimeter,m,k", [(1, 4, 3), (2, 3, 4), (Fraction(7, 3), 5, 2)])
def test_circle_distances_match_arc_oracle(perimeter, m, k):
    V, g, G, _ = circle_model(perimeter, m, k)
    order = node_order(G)
    step = Fraction(perimeter) / G.n_nodes
    D = distance_matrix(G)
    for a, b in itertools.product(range(G.n_nodes), repeat=2):
        assert D[a][b] == circle_oracle(order[a] * step, order[b] * step, Fraction(perimeter))


def torus_oracle(p, q, a, b):
    return min(math.hypot(p[0] - q[0] + i * a, p[1] - q[1] + j * b) for i in (-1, 0, 1) for j in (-1, 0, 1))


def test_torus_distance_bounds_and_refinement():
    V, g = flat_torus_mesh(1, 1, 3)
    target = 1 * 3 + 1  # grid point (1/3, 1/3)
    truth = torus_oracle((0, 0), (1 / 3, 1 / 3), 1, 1)
    d3 = distance(build_geodesic_graph(V, g, 3), 0, target)
    d6 = distance(build_geodesic_graph(V, g, 6), 0, target)
    assert 1 / 3 <= truth - 1e-12 <= d6 + 1e-12 <= d3 + 2e-12 <= math.sqrt(2)


def test_nested_refinement_is_non_increasing():
    V, g = flat_torus_mesh(1, Fraction(3, 2), 3)
    G2, G4 = build_geodesic_graph(V, g, 2), build_geodesic_graph(V, g, 4)
    for v in V.vertices:
        d2 = G2.distances(G2.node_of_vertex(0))[G2.node_of_vertex(v)]
        d4 = G4.distances(G4.node_of_vertex(0))[G4.node_of_vertex(v)]
        assert d4 <= d2 + 1e-12


def test_distance_symmetric_and_triangle():
    V, g = flat_torus_mesh(1, 1, 3)
    G = build_geodesic_graph(V, g, 2)
    D = distance_matrix(G)
    n = G.n_nodes
    for i in range(0, n, 3):
        for j in range(0, n, 5):
            assert D[i][j] == pytest.approx(D[j][i], abs=1e-12)
            for k in range(0, n, 7):
                assert D[i][j] <= D[i][k] + D[k][j] + 1e-12


def test_dijkstra_cutoff():
    V, g, G, _ = circle_model(2, 3, 4)
    dist, _ = dijkstra(G, [0], cutoff=Fraction(1, 3))
    finite = [d for d in dist if d != math.inf]
    assert max(finite) <= Fraction(1, 3)


def test_ball_profile_circle(circle2):
    V, g, G, _ = circle2
    prof = ball_volume_profile(V, g, G, 0, [0, Fraction(1, 4), Fraction(1, 2), 1, 2])
    assert prof.volumes[0] == 0
    assert prof.volumes[2] == 1
    assert prof.volumes[1] == Fraction(1, 2)
    assert prof.volumes[-1] == 2 == prof.total_volume
    assert all(e == 0 for e in prof.error_bounds)


def test_ball_profile_torus_disk_law():
    V, g = flat_torus_mesh(1, 1, 6)
    G = build_geodesic_graph(V, g, 5)
    radii = [0, 0.1, 0.2, 0.25]
    prof = ball_volume_profile(V, g, G, 0, radii)
    for r, vol, err in zip(prof.radii, prof.volumes, prof.error_bounds):
        assert abs(vol - math.pi * r * r) <= err + 1e-12
    assert list(prof.volumes) == sorted(prof.volumes)
    assert prof.volumes[-1] <= prof.total_volume


def test_profile_csv():
    buf = io.StringIO()
    write_profile_csv(buf, [(0, 0, 0, "pass"), (1, 2, 1, "pass")])
    assert buf.getvalue().splitlines() == ["radius,volume,lower_bound,verdict", "0.0,0.0,0.0,pass", "1.0,2.0,1.0,pass"]


def test_net_fig2_certificate(circle1):
    V, g, G, _ = circle1
    net = make_net(G, [1, 2, 3], Fraction(1, 4))
    assert net.alpha <= Fraction(1, 4)
    assert is_alpha_dense(G, [1, 2, 3], Fraction(1, 4))
    greedy = alpha_dense_net(G, Fraction(1, 4))
    assert len(greedy.points) <= 4
    assert covering_radius(G, greedy.points) <= Fraction(1, 4)


def test_net_fig3_certificate(circle2):
    V, g, G, _ = circle2
    assert is_alpha_dense(G, [0, 1, 2], Fraction(1, 3))
    assert len(alpha_dense_net(G, Fraction(1, 3)).points) <= 6


def test_net_large_alpha_single_point(circle2):
    V, g, G, _ = circle2
    assert len(alpha_dense_net(G, 5).points) == 1


@settings(max_examples=25, deadline=None)
@given(st.fractions(min_value=Fraction(1, 12), max_value=Fraction(3, 2)))
def test_greedy_net_is_dense_and_packed(alpha):
    V, g, G, _ = circle_model(2, 3, 4)
    net = alpha_dense_net(G, alpha)
    assert is_alpha_dense(G, net.points, alpha)
    D = distance_matrix(G, net.points)
    for i, j in itertools.combinations(range(len(net.points)), 2):
        assert D[i][net.points[j]] > alpha


def line(x, y):
    return abs(x - y)


def test_hausdorff_line_examples():
    assert hausdorff_distance([0], [1], line) == 1
    assert hausdorff_distance([0, 1], [0, 0.5, 1], line) == 0.5
    with pytest.raises(EmptySet):
        hausdorff_distance([], [1], line)


@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.fractions(0, 10), min_size=1, max_size=8),
    st.fractions(0, 1),
    st.lists(st.fractions(-1, 1), min_size=0, max_size=8),
)
def test_hausdorff_tube_bound(A, eps, jitter):
    B = list(A) + [A[i % len(A)] + eps * j for i, j in enumerate(jitter)]
    assert hausdorff_distance(A, B, line) <= eps


def test_hausdorff_nested_family_converges():
    # A_p = {0} ∪ [1, 1 + 1/p] sampled; intersection is {0, 1}
    limit = [0, 1]
    values = []
    for p in range(1, 40, 4):
        A = [0] + [1 + Fraction(i, 4 * p * p) for i in range(4 * p + 1)]
        values.append(hausdorff_distance(A, limit, line))
    assert values == sorted(values, reverse=True)
    assert values[-1] < Fraction(1, 30)


def test_distortion_all_nodes_zero(circle1):
    V, g, G, _ = circle1
    rep = net_distortion_report(G, list(range(G.n_nodes)))
    assert rep.eta == 0
    assert rep.upper_bound_holds


def test_distortion_fig2_net(circle1):
    V, g, G, _ = circle1
    rep = net_distortion_report(G, [1, 2, 3], max_pairs=None)
    assert rep.eta <= Fraction(1, 4)
    assert rep.upper_bound_holds
    assert rep.pairs_checked > 0
