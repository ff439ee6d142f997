import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import corpus, interior_points
from warm.dynamics import (
    DegenerateFaceError,
    FlowError,
    drift,
    flow,
    jacobian,
    lyapunov,
    lyapunov_gradient,
    lyapunov_rate,
    powers,
)
from warm.model import SubsetDistribution, WarmModel, build_cycle, build_fixed_m, build_star, graph_to_warm


def fd_jacobian(model, v, h=1e-6):
    n = v.size
    J = np.empty((n, n))
    for k in range(n):
        e = np.zeros(n)
        e[k] = h
        J[:, k] = (drift(model, v + e) - drift(model, v - e)) / (2 * h)
    return J


def test_powers_zero_short_circuit():
    assert np.array_equal(powers(np.array([0.0, 1.0, 4.0]), 0.5), [0.0, 1.0, 2.0])


def test_drift_triangle_uniform():
    m = graph_to_warm(build_cycle(3), 2.0)
    assert np.allclose(drift(m, np.full(3, 1 / 3)), 0, atol=1e-15)


def test_drift_triangle_asymmetric_root():
    m = graph_to_warm(build_cycle(3), 2.0)
    assert np.allclose(drift(m, [0.6, 0.2, 0.2]), 0, atol=1e-15)


def test_drift_degenerate_face():
    # at (1, 0) the leaf subset {1} has no weight: 0/0
    m = graph_to_warm(build_star(2), 4.0)
    with pytest.raises(DegenerateFaceError):
        drift(m, [1.0, 0.0])
    with pytest.raises(DegenerateFaceError):
        lyapunov(m, [1.0, 0.0])


def test_drift_zero_component_without_degeneracy():
    m = graph_to_warm(build_cycle(3), 2.0)
    F = drift(m, [0.5, 0.5, 0.0])
    assert np.allclose(F, 0, atol=1e-15)


@pytest.mark.parametrize("model", corpus(), ids=lambda m: m.label)
def test_drift_sums_to_zero(model, rng):
    for v in interior_points(rng, model.n, 25):
        v = v / v.sum()
        assert abs(drift(model, v).sum()) < 1e-12


@pytest.mark.parametrize("model", corpus(), ids=lambda m: m.label)
def test_jacobian_matches_finite_differences(model, rng):
    for v in interior_points(rng, model.n, 20):
        J = jacobian(model, v)
        fd = fd_jacobian(model, v)
        assert np.max(np.abs(J - fd)) / max(1.0, np.max(np.abs(fd))) < 1e-6


def test_jacobian_face_convention():
    m = graph_to_warm(build_cycle(3), 2.0)
    J = jacobian(m, [0.5, 0.5, 0.0])
    assert J[2, 2] == -1.0
    assert np.all(J[2, :2] == 0) and np.all(J[:2, 2] == 0)


def test_jacobian_star_two_critical():
    m = graph_to_warm(build_star(2), 3.0)
    ev = np.sort(np.linalg.eigvals(jacobian(m, [0.5, 0.5])).real)
    assert ev == pytest.approx([-1.0, 0.0], abs=1e-12)


@pytest.mark.parametrize("n,m", [(3, 2), (4, 2), (5, 3)])
def test_jacobian_barycentre_structure(n, m):
    # strongly symmetric laws: constant diagonal, constant off-diagonal at 1/n
    model = WarmModel(build_fixed_m(n, m), 2.2)
    J = jacobian(model, np.full(n, 1 / n))
    off = J[~np.eye(n, dtype=bool)]
    assert np.ptp(np.diag(J)) < 1e-14 and np.ptp(off) < 1e-14


def test_lyapunov_single_colour():
    m = WarmModel(SubsetDistribution.from_entries(1, [((0,), 1.0)]), 3.0)
    assert lyapunov(m, [1.0]) == -1.0


@pytest.mark.parametrize("model", corpus(), ids=lambda m: m.label)
def test_lyapunov_gradient_identity(model, rng):
    for x in interior_points(rng, model.n, 10):
        g = lyapunov_gradient(model, x)
        assert np.allclose(x * g, drift(model, x), atol=1e-12)
        # gradient itself against central differences of L
        h = 1e-6
        fd = np.array([(lyapunov(model, x + h * e) - lyapunov(model, x - h * e)) / (2 * h) for e in np.eye(model.n)])
        assert np.max(np.abs(x * fd - drift(model, x))) < 1e-8


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 7), st.integers(0, 10**6))
def test_lyapunov_rate_nonnegative(which, seed):
    model = corpus()[which]
    x = np.random.default_rng(seed).dirichlet(np.ones(model.n))
    x = np.clip(x, 1e-9, None)
    x /= x.sum()
    assert lyapunov_rate(model, x) >= -1e-12


def test_flow_triangle_near_uniform():
    m = graph_to_warm(build_cycle(3), 2.0)
    tr = flow(m, [0.34, 0.33, 0.33])
    assert tr.terminal_drift_norm < 1e-10
    assert np.all(np.diff(tr.lyapunov) >= -1e-10)
    # the start lies on an invariant line, so the limit is the saddle on it
    assert np.allclose(tr.final, [0.6, 0.2, 0.2], atol=1e-8)


def test_flow_triangle_generic_start_reaches_edge_point():
    m = graph_to_warm(build_cycle(3), 2.0)
    tr = flow(m, [0.36, 0.34, 0.30])
    assert np.allclose(tr.final, [0.5, 0.5, 0.0], atol=1e-6)
    assert lyapunov(m, np.full(3, 1 / 3)) < lyapunov(m, tr.final)


def test_flow_constant_at_equilibrium():
    m = graph_to_warm(build_cycle(3), 2.0)
    tr = flow(m, [0.5, 0.5, 0.0])
    assert np.max(np.abs(tr.points - tr.points[0])) < 1e-12
    assert tr.stop_reason == "converged"


def test_flow_star_three_uniform_limit(rng):
    m = graph_to_warm(build_star(3), 2.0)
    tr = flow(m, rng.dirichlet(np.ones(3)))
    assert np.allclose(tr.final, 1 / 3, atol=1e-6)


def test_flow_records_stride_and_csv(tmp_path):
    m = graph_to_warm(build_cycle(3), 2.0)
    tr = flow(m, [0.36, 0.34, 0.30], t_max=1.0, record_stride=10)
    assert tr.times[0] == 0 and tr.times[-1] == pytest.approx(1.0)
    assert np.all(np.diff(tr.times) > 0)
    p = tmp_path / "t.csv"
    tr.write_csv(p)
    lines = p.read_text().splitlines()
    assert lines[0] == "t,x_0,x_1,x_2,L" and len(lines) == len(tr.times) + 1


def test_flow_errors():
    m = graph_to_warm(build_cycle(3), 2.0)
    with pytest.raises(FlowError):
        flow(m, [1 / 3] * 3, step=0.0)
    with pytest.raises(ValueError):
        flow(m, [0.5, 0.6, 0.0])


@pytest.mark.parametrize("model", corpus(), ids=lambda m: m.label)
def test_flow_stays_on_simplex(model, rng):
    tr = flow(model, rng.dirichlet(np.ones(model.n)), t_max=20.0)
    assert np.all(tr.points >= 0)
    assert np.allclose(tr.points.sum(axis=1), 1, atol=1e-12)
    assert np.all(np.diff(tr.lyapunov) >= -1e-10)
