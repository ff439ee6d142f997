import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from warm.equilibria import CRITICAL, STABLE, UNSTABLE, classify, find_equilibria
from warm.model import GraphSpec, build_complete, build_cycle, build_path, build_star, build_whisker, graph_to_warm
from warm.reduction import (
    ConsistencyError,
    ReductionError,
    SpanningCollection,
    combine_classes,
    compose_stability,
    embed_equilibrium,
    enumerate_spanning_collections,
    enumerate_star_forests,
    is_whisker_forest,
    part_model,
    star_forest_allocation,
    whisker_forest_probe,
)


def brute_partitions(g):
    """Every set partition by brute force over block labels, filtered to connected blocks of size >= 2."""
    out = set()
    n = g.n_v
    for code in range(n**n):
        lab = [(code // n**i) % n for i in range(n)]
        blocks = {}
        for v, b in enumerate(lab):
            blocks.setdefault(b, []).append(v)
        parts = [tuple(b) for b in blocks.values()]
        if all(len(p) >= 2 and len(g.component_of(p[0], set(p))) == len(p) for p in parts):
            out.add(tuple(sorted(parts)))
    return out


@pytest.mark.parametrize("g", [build_cycle(3), build_cycle(4), build_path(3), build_star(3), build_whisker(1, 2), build_cycle(5)], ids=str)
def test_enumeration_against_brute_force(g):
    got = {tuple(sorted(c.parts)) for c in enumerate_spanning_collections(g)}
    assert got == brute_partitions(g)


def test_enumeration_counts():
    assert len(enumerate_spanning_collections(build_cycle(3))) == 1
    c4 = enumerate_spanning_collections(build_cycle(4))
    assert len(c4) == 3
    assert {c.support for c in c4 if len(c.parts) == 2} == {(0, 2), (1, 3)}
    p3 = enumerate_spanning_collections(build_path(3))
    assert len(p3) == 2 and {c.support for c in p3} == {(0, 1, 2), (0, 2)}


def test_enumeration_limit():
    with pytest.raises(ReductionError):
        enumerate_spanning_collections(build_cycle(13))


def test_collection_validation():
    g = build_path(3)
    with pytest.raises(ReductionError):
        SpanningCollection(g, ((0, 1), (2,), (3,)), ((0,), (), ()))
    with pytest.raises(ReductionError):
        SpanningCollection(g, ((0, 2), (1, 3)), ((), ()))


def test_embed_cycle_four_matching():
    g = build_cycle(4)
    (c,) = [c for c in enumerate_spanning_collections(g) if c.support == (0, 2)]
    x = embed_equilibrium(c, [[1.0], [1.0]], 3.0)
    assert np.array_equal(x, [0.5, 0.0, 0.5, 0.0])


def test_embed_identity_on_whole_graph():
    g = build_cycle(3)
    (c,) = enumerate_spanning_collections(g)
    assert np.allclose(embed_equilibrium(c, [[0.5, 0.5, 0.0]], 2.0), [0.5, 0.5, 0.0])


def test_embed_whisker_two_stars():
    g = build_whisker(2, 2)
    (c,) = [c for c in enumerate_spanning_collections(g) if len(c.parts) == 2]
    a = 2.5
    x = embed_equilibrium(c, [[0.5, 0.5], [0.5, 0.5]], a)
    assert np.allclose(x, [0.25, 0.25, 0.0, 0.25, 0.25])
    parts = [classify(part_model(c, j, a), [0.5, 0.5]) for j in range(2)]
    cls, _ = compose_stability(c, parts, a)
    assert cls == STABLE


def test_embed_rejects_non_equilibrium():
    (c,) = enumerate_spanning_collections(build_cycle(3))
    with pytest.raises(ReductionError):
        embed_equilibrium(c, [[0.7, 0.2, 0.1]], 2.0)
    with pytest.raises(ReductionError):
        embed_equilibrium(c, [[0.5, 0.5]], 2.0)


def test_combine_classes():
    assert combine_classes([STABLE, STABLE]) == STABLE
    assert combine_classes([STABLE, CRITICAL]) == CRITICAL
    assert combine_classes([CRITICAL, UNSTABLE]) == UNSTABLE


@pytest.mark.parametrize("a", [1.5, 3.0, 10.0])
def test_cycle_four_alternating_stable(a):
    c = [c for c in enumerate_spanning_collections(build_cycle(4)) if c.support == (0, 2)][0]
    parts = [classify(part_model(c, j, a), [1.0]) for j in range(2)]
    cls, x = compose_stability(c, parts, a)
    assert cls == STABLE and np.allclose(x, [0.5, 0, 0.5, 0])


def test_unstable_part_gives_unstable_parent():
    (c,) = enumerate_spanning_collections(build_cycle(3))
    e = classify(part_model(c, 0, 2.0), [1 / 3] * 3)
    assert compose_stability(c, [e], 2.0)[0] == UNSTABLE


def test_consistency_error_on_wrong_label():
    c = [c for c in enumerate_spanning_collections(build_cycle(4)) if c.support == (0, 2)][0]
    parts = [classify(part_model(c, j, 2.0), [1.0]) for j in range(2)]
    parts[0].classification = UNSTABLE
    with pytest.raises(ConsistencyError):
        compose_stability(c, parts, 2.0)


def test_star_forests():
    assert len(enumerate_star_forests(build_cycle(4))) == 2
    assert len(enumerate_star_forests(build_star(5))) == 1
    # every 2-edge path inside the triangle is a spanning star
    assert len(enumerate_star_forests(build_cycle(3))) == 3


@pytest.mark.parametrize("g", [build_cycle(4), build_star(5), build_cycle(3), build_path(4), build_whisker(2, 2), build_complete(4)], ids=str)
@pytest.mark.parametrize("a", [1.5, 5.0, 12.0])
def test_star_forest_allocations_never_unstable(g, a):
    allocs = star_forest_allocation(g, a)
    assert allocs
    for al in allocs:
        assert al.classification in (STABLE, CRITICAL)
        assert np.max(np.abs(al.equilibrium.residual)) < 1e-10
        assert set(np.flatnonzero(al.point > 0)) == set(al.collection.support)


def test_star_five_allocation_switches_branch():
    (lo,) = star_forest_allocation(build_star(5), 5.0)
    (hi,) = star_forest_allocation(build_star(5), 7.0)
    assert np.allclose(lo.point, 0.2)
    assert not np.allclose(hi.point, 0.2) and hi.classification == STABLE


def test_allocation_json():
    al = star_forest_allocation(build_cycle(4), 5.0)[0]
    d = al.to_dict()
    assert set(d) == {"parts", "v", "class"} and d["class"] == STABLE


def test_is_whisker_forest():
    g = build_path(3)
    assert is_whisker_forest(g, [0, 1, 2])  # path with 3 edges has diameter 3
    assert is_whisker_forest(g, [0, 2])
    assert not is_whisker_forest(g, [0, 1])  # vertex 3 uncovered
    p5 = build_path(4)
    assert not is_whisker_forest(p5, [0, 1, 2, 3])  # diameter 4
    assert not is_whisker_forest(build_cycle(4), [0, 1, 2, 3])  # not a tree


def test_probe_reports_only():
    rows = whisker_forest_probe(build_path(3), [2.0, 10.0], n_starts=20)
    assert [r["alpha"] for r in rows] == [2.0, 10.0]
    for r in rows:
        assert r["stable"] >= r["whisker_forest"] >= 0


def random_connected_graph(rng, n_v):
    while True:
        edges = [(a, b) for a in range(n_v) for b in range(a + 1, n_v) if rng.random() < 0.55]
        if not edges:
            continue
        g = GraphSpec(n_v, tuple(edges))
        if g.connected:
            return g


def test_randomized_compositions(rng):
    done = 0
    while done < 20:
        g = random_connected_graph(rng, int(rng.integers(4, 7)))
        a = float(rng.uniform(1.2, 8.0))
        cols = enumerate_spanning_collections(g)
        c = cols[int(rng.integers(len(cols)))]
        parts = []
        for j in range(len(c.parts)):
            cat = find_equilibria(part_model(c, j, a), 10)
            parts.append(cat.equilibria[int(rng.integers(len(cat)))])
        cls, x = compose_stability(c, parts, a)
        assert cls == classify(graph_to_warm(g, a), x).classification
        done += 1


@settings(max_examples=20, deadline=None)
@given(st.sampled_from([build_cycle(4), build_cycle(5), build_path(3), build_whisker(2, 1), build_complete(4)]), st.floats(1.1, 9.0), st.data())
def test_property_embedding_conserves_mass(g, a, data):
    cols = enumerate_spanning_collections(g)
    c = data.draw(st.sampled_from(cols))
    pts = [find_equilibria(part_model(c, j, a), 5).equilibria[0].point for j in range(len(c.parts))]
    x = embed_equilibrium(c, pts, a)
    assert abs(x.sum() - 1) < 1e-12
    assert set(np.flatnonzero(x > 0)) <= set(c.support)
