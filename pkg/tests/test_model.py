import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from warm.model import (
    GraphSpec,
    ModelError,
    SubsetDistribution,
    WarmModel,
    build_bernoulli,
    build_complete,
    build_cycle,
    build_fixed_m,
    build_path,
    build_star,
    build_whisker,
    check_symmetry,
    graph_to_distribution,
    graph_to_warm,
    load_model,
    mask_of,
    model_from_dict,
    model_to_dict,
)


def as_dict(dist):
    return {c: p for c, p in dist.subsets()}


def test_fixed_m_three_choose_two():
    d = build_fixed_m(3, 2)
    assert as_dict(d) == pytest.approx({(0, 1): 1 / 3, (0, 2): 1 / 3, (1, 2): 1 / 3})


def test_fixed_m_single_subset():
    assert as_dict(build_fixed_m(2, 2)) == {(0, 1): 1.0}


def test_fixed_m_five_choose_three():
    d = build_fixed_m(5, 3)
    assert len(d) == 10
    assert np.allclose(d.prob_array, 0.1)
    assert sorted(c for c, _ in d.subsets()) == sorted(__import__("itertools").combinations(range(5), 3))


@pytest.mark.parametrize("n,m", [(0, 0), (3, 0), (3, 4), (21, 2)])
def test_fixed_m_rejects(n, m):
    with pytest.raises(ModelError):
        build_fixed_m(n, m)


def test_bernoulli_two_half():
    assert as_dict(build_bernoulli(2, 0.5)) == pytest.approx({(0,): 1 / 3, (1,): 1 / 3, (0, 1): 1 / 3})


def test_bernoulli_single_colour():
    assert as_dict(build_bernoulli(1, 0.3)) == pytest.approx({(0,): 1.0}, abs=1e-12)


def test_bernoulli_equals_two_leaf_star():
    assert build_bernoulli(2, 0.5).isclose(graph_to_distribution(build_star(2)))


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5])
def test_bernoulli_rejects(p):
    with pytest.raises(ModelError):
        build_bernoulli(3, p)


def test_graph_builders():
    s = build_star(3)
    assert s.n_v == 4 and set(s.edges) == {(0, 1), (0, 2), (0, 3)}
    w = build_whisker(2, 2)
    assert (w.n_v, w.n_edges) == (6, 5)
    assert w.edges[2] == (0, 1)
    assert build_path(3).n_v == 4
    assert build_complete(4).n_edges == 6


def test_whisker_diameter_three():
    w = build_whisker(2, 2)
    ecc = []
    for src in range(w.n_v):
        dist = {src: 0}
        queue = [src]
        for x in queue:
            for y in w.neighbours(x):
                if y not in dist:
                    dist[y] = dist[x] + 1
                    queue.append(y)
        ecc.append(max(dist.values()))
    assert max(ecc) == 3


@pytest.mark.parametrize(
    "builder,arg", [(build_star, 0), (build_cycle, 2), (build_complete, 2), (build_path, 0), (build_whisker, 0)]
)
def test_graph_minimum_sizes(builder, arg):
    with pytest.raises(ModelError):
        builder(arg, 1) if builder is build_whisker else builder(arg)


def test_triangle_identities():
    a = graph_to_distribution(build_complete(3))
    b = graph_to_distribution(build_cycle(3))
    c = build_fixed_m(3, 2)
    assert a.isclose(b) and b.isclose(c)


def test_star_two_law():
    assert as_dict(graph_to_distribution(build_star(2))) == pytest.approx({(0,): 1 / 3, (1,): 1 / 3, (0, 1): 1 / 3})


def test_isolated_vertex_rejected():
    with pytest.raises(ModelError):
        graph_to_distribution(GraphSpec(4, ((0, 1), (1, 2))))


def test_edge_validation():
    with pytest.raises(ModelError):
        GraphSpec(3, ((0, 0),))
    with pytest.raises(ModelError):
        GraphSpec(3, ((0, 1), (1, 0)))
    with pytest.raises(ModelError):
        GraphSpec(3, ((0, 3),))
    with pytest.raises(ModelError):
        GraphSpec(3, ())


def test_single_edge_merges_identical_sets():
    # both endpoints of a lone edge see the same incident set
    d = graph_to_distribution(GraphSpec(2, ((0, 1),)))
    assert as_dict(d) == {(0,): 1.0}


def test_distribution_invariants():
    with pytest.raises(ModelError):
        SubsetDistribution.from_entries(2, [((), 0.5), ((0, 1), 0.5)])
    with pytest.raises(ModelError):
        SubsetDistribution.from_entries(2, [((0,), 0.5), ((0,), 0.5)])
    with pytest.raises(ModelError):
        SubsetDistribution.from_entries(2, [((0,), 0.5), ((0, 1), 0.4)])
    with pytest.raises(ModelError):
        SubsetDistribution.from_entries(3, [((0,), 0.5), ((0, 1), 0.5)])  # colour 2 never offered
    with pytest.raises(ModelError):
        WarmModel(build_fixed_m(3, 2), 1.0)


def test_symmetry_reports():
    r = check_symmetry(build_fixed_m(4, 2))
    assert r.strong and r.weak
    r = check_symmetry(graph_to_distribution(build_cycle(5)))
    assert not r.strong and r.weak and r.a_m[2] == 2
    assert not check_symmetry(graph_to_distribution(build_path(3))).weak


@pytest.mark.parametrize("n", range(2, 8))
def test_star_strong_symmetry(n):
    r = check_symmetry(graph_to_distribution(build_star(n)))
    assert r.strong
    assert r.p_m[1] == pytest.approx(1 / (n + 1)) and r.p_m[n] == pytest.approx(1 / (n + 1))
    assert sum(math.comb(n, m) * p for m, p in r.p_m.items()) == pytest.approx(1, abs=1e-12)


@pytest.mark.parametrize(
    "dist",
    [build_fixed_m(5, 2), build_bernoulli(4, 0.3), graph_to_distribution(build_cycle(6)), graph_to_distribution(build_star(4))],
)
def test_weak_symmetry_size_law(dist):
    r = check_symmetry(dist)
    assert r.weak
    sizes = {}
    for c, p in dist.subsets():
        sizes[len(c)] = sizes.get(len(c), 0.0) + p
    for m, q in r.size_probabilities(dist.n).items():
        assert q == pytest.approx(sizes[m], abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(["star", "cycle", "complete", "path", "whisker", "fixed", "bern"]), st.integers(1, 6), st.floats(0.05, 0.95))
def test_builders_normalised(kind, k, p):
    if kind == "star":
        d = graph_to_distribution(build_star(k))
    elif kind == "cycle":
        d = graph_to_distribution(build_cycle(k + 2))
    elif kind == "complete":
        d = graph_to_distribution(build_complete(k + 2))
    elif kind == "path":
        d = graph_to_distribution(build_path(k))
    elif kind == "whisker":
        d = graph_to_distribution(build_whisker(k, 7 - k))
    elif kind == "fixed":
        d = build_fixed_m(6, k)
    else:
        d = build_bernoulli(k, p)
    assert abs(sum(d.probs) - 1) < 1e-12
    assert all(m != 0 for m in d.masks)


def test_mask_round_trip():
    assert mask_of([0, 3, 63]) == 1 | 8 | (1 << 63)
    with pytest.raises(ModelError):
        SubsetDistribution.from_entries(3, [((0, 64), 1.0)])


def test_relabel_permutes_incidence():
    d = graph_to_distribution(build_path(3))
    perm = [2, 0, 1]
    e = d.relabel(perm)
    assert np.array_equal(e.incidence.sum(axis=0)[perm], d.incidence.sum(axis=0))


def test_json_shapes(tmp_path):
    m = model_from_dict({"family": "star", "alpha": 2.0, "params": {"n": 2}})
    assert m.dist.isclose(build_bernoulli(2, 0.5))
    doc = model_to_dict(m)
    path = tmp_path / "m.json"
    path.write_text(__import__("json").dumps(doc))
    back = load_model(path)
    assert back.dist.isclose(m.dist) and back.alpha == 2.0
    assert load_model(path, alpha=3.0).alpha == 3.0
    g = model_from_dict({"family": "graph", "alpha": 2, "params": {"n_v": 3, "edges": [[0, 1], [1, 2]]}})
    assert g.n == 2


@pytest.mark.parametrize(
    "doc",
    [
        {"n": 2, "alpha": 2.0, "subsets": [{"colours": [0], "p": 0.5}]},
        {"n": 2, "alpha": 0.5, "subsets": [{"colours": [0, 1], "p": 1.0}]},
        {"family": "nope", "alpha": 2.0},
        {"family": "star", "alpha": 2.0, "params": {}},
        {"n": 2, "subsets": []},
    ],
)
def test_json_rejects(doc):
    with pytest.raises(ModelError):
        model_from_dict(doc)
