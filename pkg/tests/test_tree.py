import itertools
from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from flowtree.tree import (BudgetExceeded, OutOfBand, Trapezoid, TreeError, UnknownVertex,
                           VertexRef, build_truncation, descendants_n, distance, is_below,
                           predecessor, successors, trapezoid_enlargement, trapezoid_vertices)


def test_counts():
    t = build_truncation(2, 0, -3)
    assert t.size == 15
    assert t.level_size(3) == 8
    assert build_truncation(3, 0, -2).size == 13
    single = build_truncation(2, 0, 0)
    assert single.size == 1
    assert successors(single, single.root) == []


def test_invalid_parameters():
    with pytest.raises(TreeError):
        build_truncation(1, 0, -2)
    with pytest.raises(TreeError):
        build_truncation(2, 0, 1)
    with pytest.raises(BudgetExceeded):
        build_truncation(2, 0, -40)


def test_level_major_layout():
    t = build_truncation(3, 2, -1)
    for d in range(t.height + 1):
        sl = t.level_slice(d)
        assert np.all(t.level[sl] == t.root_level - d)
    for vid in range(1, t.size):
        assert t.vertex(int(t.parent[vid])) == predecessor(t, t.vertex(vid))


def test_predecessor_and_successors():
    t = build_truncation(3, 0, -3)
    root = t.root
    assert predecessor(t, VertexRef(-1, (0,))) == root
    assert predecessor(t, VertexRef(-2, (1, 0))) == VertexRef(-1, (1,))
    assert predecessor(t, root) is None
    assert successors(t, VertexRef(-1, (2,))) == [VertexRef(-2, (2, j)) for j in range(3)]
    assert successors(t, VertexRef(-3, (0, 0, 0))) == []
    with pytest.raises(UnknownVertex):
        predecessor(t, VertexRef(-5, (0,) * 5))
    t2 = build_truncation(2, 0, -2)
    assert successors(t2, t2.root) == [VertexRef(-1, (0,)), VertexRef(-1, (1,))]


def test_distance_examples():
    root = VertexRef(0)
    assert distance(root, root) == 0
    assert distance(VertexRef(-1, (0,)), VertexRef(-1, (1,))) == 2
    assert distance(root, VertexRef(-3, (0, 1, 1))) == 3


def _bfs(t, src):
    adj = [[] for _ in range(t.size)]
    for v in range(1, t.size):
        p = int(t.parent[v])
        adj[v].append(p)
        adj[p].append(v)
    d = [-1] * t.size
    d[src] = 0
    dq = deque([src])
    while dq:
        u = dq.popleft()
        for w in adj[u]:
            if d[w] < 0:
                d[w] = d[u] + 1
                dq.append(w)
    return np.array(d)


def test_distance_matches_bfs_all_pairs():
    t = build_truncation(2, 0, -5)
    verts = [t.vertex(i) for i in range(t.size)]
    for i in range(t.size):
        ref = _bfs(t, i)
        assert np.array_equal(t.distances_from(i), ref)
        assert all(distance(verts[i], verts[j]) == ref[j] for j in range(t.size))


def test_order_iff_distance_is_level_gap():
    t = build_truncation(2, 0, -4)
    verts = [t.vertex(i) for i in range(t.size)]
    for x, y in itertools.product(verts, repeat=2):
        assert is_below(x, y) == (distance(x, y) == y.level - x.level)


def test_descendants():
    t = build_truncation(3, 0, -3)
    x = VertexRef(-1, (1,))
    assert descendants_n(t, x, 0) == [x]
    assert len(descendants_n(t, t.root, 2)) == 9
    assert len(descendants_n(build_truncation(2, 0, -3), VertexRef(0), 2)) == 4
    for y in descendants_n(t, x, 2):
        assert y.level == x.level - 2 and y.word[:1] == x.word
    with pytest.raises(OutOfBand):
        descendants_n(t, x, 3)


def test_trapezoids():
    t2 = build_truncation(2, 0, -6)
    F = Trapezoid(t2.root, 1, 2)
    assert trapezoid_vertices(t2, F) == set(successors(t2, t2.root))
    t3 = build_truncation(3, 0, -3)
    V = trapezoid_vertices(t3, Trapezoid(t3.root, 1, 2))
    assert len(V) == 3
    s = Trapezoid.singleton(t3.root)
    assert trapezoid_vertices(t3, s) == {t3.root}
    assert trapezoid_enlargement(t3, s) == {t3.root}
    with pytest.raises(TreeError):
        Trapezoid(t3.root, 2, 3)
    with pytest.raises(TreeError):
        Trapezoid(t3.root, 1, 13)


def test_enlargement_brute_force():
    t = build_truncation(2, 0, -6)
    F = Trapezoid(t.root, 2, 4)
    Fv = trapezoid_vertices(t, F)
    verts = [t.vertex(i) for i in range(t.size)]
    want = {x for x in verts if min(distance(x, y) for y in Fv) < 2}
    assert trapezoid_enlargement(t, F) == want
    G = Trapezoid(t.root, 1, 3)
    assert trapezoid_enlargement(t, G) == trapezoid_vertices(t, G)


@settings(max_examples=40, deadline=None)
@given(q=st.integers(2, 4), h=st.integers(1, 2), ratio=st.integers(2, 3), top=st.integers(0, 1))
def test_trapezoid_size(q, h, ratio, top):
    t = build_truncation(q, 0, -(top + h * ratio))
    x0 = t.vertex(int(t.offsets[top]))
    V = trapezoid_vertices(t, Trapezoid(x0, h, h * ratio))
    assert len(V) == sum(q ** j for j in range(h, h * ratio))


@settings(max_examples=30, deadline=None)
@given(q=st.integers(2, 5), depth=st.integers(1, 4), data=st.data())
def test_successor_predecessor_roundtrip(q, depth, data):
    t = build_truncation(q, 0, -depth)
    vid = data.draw(st.integers(0, int(t.offsets[depth]) - 1))
    x = t.vertex(vid)
    kids = successors(t, x)
    assert len(kids) == q
    assert all(predecessor(t, y) == x for y in kids)
    y = t.vertex(data.draw(st.integers(0, t.size - 1)))
    assert distance(x, y) == distance(y, x)
