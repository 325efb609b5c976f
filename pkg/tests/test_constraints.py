import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from ngrhmc.catalog import FIG2_A, FIG2_B, DiagonalQuadraticF, Gaussian, SpectralRadiusF, build_example
from ngrhmc.constraints import (
    L1Norm,
    L2Norm,
    Linear,
    NonlinearAffine,
    evaluate,
    inward_normal,
    locate_collision,
    path_coefficients,
)
from ngrhmc.errors import AmbiguousSign, DegenerateNormal, InfeasibleStart
from ngrhmc.integrator import AugmentedFlow, DenseStep, StepControl, attempt_step
from ngrhmc.oracles import grid_scan_first_exit
from ngrhmc.target import Standardization

I2 = Standardization.identity(2)


class FirstCoordinate:
    def __call__(self, w):
        return w[..., 0]

    def grad(self, w):
        g = np.zeros_like(w)
        g[..., 0] = 1.0
        return g


def linear_step(q0, q1):
    """Hermite step whose position moves on a straight line from q0 to q1."""
    q0 = np.asarray(q0, dtype=float)
    q1 = np.asarray(q1, dtype=float)
    v = q1 - q0
    return DenseStep(0.0, 1.0, np.r_[q0, v], np.r_[q1, v], np.r_[v, 0 * v], np.r_[v, 0 * v])


# -- evaluate / normals ------------------------------------------------------

def test_evaluate_examples():
    assert evaluate(Linear([1.0, -2.0], 1.0), np.zeros(2)) == 1.0
    l2 = L2Norm(FIG2_A, FIG2_B, 2.0)
    assert evaluate(l2, np.array([0.5, 0.2])) == pytest.approx(3.75)
    F = SpectralRadiusF(np.diag([0.8, 0.9]), rows=[1, 0], cols=[0, 1])
    spec = NonlinearAffine(np.eye(2), np.zeros(2), F, F.grad, vectorized=True)
    assert evaluate(spec, np.zeros(2)) == pytest.approx(0.1)


def test_evaluate_batches():
    l1 = L1Norm(FIG2_A, FIG2_B, 2.0)
    q = np.random.default_rng(0).standard_normal((5, 2))
    assert np.allclose(l1.evaluate(q), [l1.evaluate(x) for x in q])


def test_inward_normal_examples():
    lin = Linear([1.0, -2.0], 1.0)
    assert np.allclose(inward_normal(lin, I2, np.array([3.0, 7.0])).n, [1.0, -2.0])
    disc = L2Norm(np.eye(2), np.zeros(2), 1.0)
    assert np.allclose(inward_normal(disc, I2, np.array([1.0, 0.0])).n, [-2.0, 0.0])
    assert Linear([0.0, 0.0, 1.0], 0.0).active_set().tolist() == [2]


def test_normal_is_scaled_by_standardization():
    lin = Linear([1.0, -2.0], 1.0)
    std = Standardization(np.zeros(2), np.array([3.0, 0.5]))
    assert np.allclose(inward_normal(lin, std, np.zeros(2)).n, [3.0, -1.0])


def test_degenerate_normal():
    disc = L2Norm(np.eye(2), np.zeros(2), 1.0)
    with pytest.raises(DegenerateNormal):
        inward_normal(disc, I2, np.zeros(2))


def test_l1_corner_is_ambiguous():
    l1 = L1Norm(np.eye(2), np.zeros(2), 1.0)
    with pytest.raises(AmbiguousSign):
        inward_normal(l1, I2, np.array([1.0, 0.0]))
    nv = inward_normal(l1, I2, np.array([1.0, 0.0]), strict=False)
    assert np.allclose(nv.n, [-1.0, 0.0])


def test_sparse_input_and_validation():
    l1 = L1Norm(sp.csr_matrix(np.array([[0.0, 1.0, 0.0]])), [0.0], 1.0)
    assert l1.active.tolist() == [1]
    with pytest.raises(ValueError):
        L2Norm(np.array([[0.0, 0.0]]), [0.0], 1.0)
    with pytest.raises(ValueError):
        L1Norm(np.eye(2), np.zeros(2), 0.0)
    with pytest.raises(ValueError):
        Linear([0.0, 0.0], 1.0)


# -- collision examples ------------------------------------------------------

def test_linear_midpoint_collision():
    step = linear_step([1.0, 0.0], [-1.0, 0.0])
    assert locate_collision(Linear([1.0, 0.0], 0.0), step, I2) == pytest.approx(0.5)


def test_l2_midpoint_collision():
    step = linear_step([0.0, 0.0], [2.0, 0.0])
    disc = L2Norm(np.eye(2), np.zeros(2), 1.0)
    assert locate_collision(disc, step, I2) == pytest.approx(0.5, abs=1e-12)


def test_nonlinear_matches_linear():
    step = linear_step([1.0, 0.0], [-1.0, 0.0])
    f = FirstCoordinate()
    nl = NonlinearAffine(np.eye(2), np.zeros(2), f, f.grad, vectorized=True)
    a = locate_collision(nl, step, I2)
    b = locate_collision(Linear([1.0, 0.0], 0.0), step, I2)
    assert a == pytest.approx(0.5, abs=1e-11) and abs(a - b) < 1e-9


def test_l1_collision_on_a_face():
    step = linear_step([0.0, 0.2], [2.0, 0.2])
    l1 = L1Norm(np.eye(2), np.zeros(2), 1.0)
    assert locate_collision(l1, step, I2) == pytest.approx(0.4, abs=1e-12)


def test_entering_path_is_not_an_event():
    # starts on the boundary and moves inwards
    step = linear_step([0.0, 0.0], [1.0, 0.0])
    assert locate_collision(Linear([1.0, 0.0], 0.0), step, I2) is None


def test_path_through_and_back_reports_exit_only():
    disc = L2Norm(np.eye(2), np.zeros(2), 1.0)
    step = linear_step([0.5, 0.0], [-3.0, 0.0])
    assert locate_collision(disc, step, I2) == pytest.approx(1.5 / 3.5, abs=1e-12)


def test_infeasible_step_start():
    step = linear_step([-1.0, 0.0], [-2.0, 0.0])
    with pytest.raises(InfeasibleStart):
        locate_collision(Linear([1.0, 0.0], 0.0), step, I2)


def test_quick_reject_far_from_boundary():
    step = linear_step([0.1, 0.0], [0.2, 0.1])
    for c in (
        Linear([1.0, 0.0], 5.0),
        L1Norm(np.eye(2), np.zeros(2), 5.0),
        L2Norm(np.eye(2), np.zeros(2), 5.0),
    ):
        assert locate_collision(c, step, I2) is None


# -- realistic Hermite steps ---------------------------------------------------

def hermite_steps(n, seed, near, spread=0.4):
    """Accepted integrator steps of a correlated Gaussian flow starting near ``near(rng)``."""
    rng = np.random.default_rng(seed)
    model = Gaussian(np.zeros(2), np.array([[1.0, 0.6], [0.6, 1.0]])).model()
    ctrl = StepControl()
    out = []
    while len(out) < n:
        std = Standardization(rng.normal(0, 0.1, 2), rng.uniform(0.5, 2.0, 2))
        flow = AugmentedFlow(model, std, 0.5, moments=False)
        q = near(rng) + spread * rng.standard_normal(2) * 0.1
        y = flow.layout.pack(std.unmap(q), 2.0 * rng.standard_normal(2))
        f0 = flow(y)
        h = rng.uniform(0.2, 1.5)
        ok = False
        while not ok:
            ok, step, h, _ = attempt_step(flow, y, f0, 0.0, h, ctrl)
        out.append((step, std))
    return out


def _boundary_point(c):
    band = 0.3 * max(1.0, abs(c.evaluate(np.zeros(2))))

    def near(rng):
        q = rng.uniform(-3, 3, (4096, 2))
        v = c.evaluate(q)
        hit = np.flatnonzero((v > 0.0) & (v < band))
        return q[hit[0]]

    return near


ellipse_F = DiagonalQuadraticF(0.55, (0.5, 1.0))
VARIANTS = {
    "linear": Linear([1.0, -2.0], 1.0),
    "l1": L1Norm(FIG2_A, FIG2_B, 2.0),
    "l2": L2Norm(FIG2_A, FIG2_B, 2.0),
    "ellipse": NonlinearAffine(np.eye(2), np.zeros(2), ellipse_F, ellipse_F.grad, vectorized=True),
}


@pytest.mark.parametrize("name", list(VARIANTS))
def test_grid_scan_oracle_agreement(name):
    c = VARIANTS[name]
    found = 0
    trials = 0
    for step, std in hermite_steps(300, seed=list(VARIANTS).index(name), near=_boundary_point(c)):
        Q = path_coefficients(step, std, 2)[:, c.active]
        if c.path_values(Q, 0.0)[0] <= 0.0:
            continue
        trials += 1
        got = c.first_exit(Q)
        ref = grid_scan_first_exit(c, Q, 100_000)
        assert (got is None) == (ref is None), (name, got, ref)
        if got is not None:
            found += 1
            assert abs(got - ref) <= 1e-4
        if trials == 100:
            break
    assert trials == 100
    assert found >= 10


def test_cross_variant_consistency():
    """One affine constraint written four ways gives the same collision times."""
    a, b, big = np.array([1.0, -2.0]), 1.0, 1e3
    lin = Linear(a, b)
    # |big - (a q + b)| <= big  <=>  0 <= a q + b <= 2 big
    l1 = L1Norm(-a[None, :], [big - b], big)
    l2 = L2Norm(-a[None, :], [big - b], big)
    f = FirstCoordinate()
    nl = NonlinearAffine(a[None, :], [b], f, f.grad, vectorized=True)
    hits = 0
    for step, std in hermite_steps(400, seed=5, near=_boundary_point(lin)):
        Q = path_coefficients(step, std, 2)
        if lin.evaluate(Q[0]) <= 0.0:
            continue
        times = [c.first_exit(Q[:, c.active]) for c in (lin, l1, l2, nl)]
        if times[0] is None:
            assert all(t is None for t in times)
        else:
            hits += 1
            assert max(times) - min(times) <= 1e-9, times
    assert hits >= 20


@given(
    st.floats(-2, 2), st.floats(-2, 2), st.floats(-3, 3), st.floats(-3, 3),
    st.floats(-3, 3), st.floats(-3, 3),
)
@settings(max_examples=300, deadline=None)
def test_reported_roots_are_exits(x0, y0, g1x, g1y, g2x, g2y):
    disc = L2Norm(np.eye(2), np.zeros(2), 1.5)
    Q = np.array([[x0, y0], [g1x, g1y], [g2x, g2y], [0.3, -0.2]])
    if disc.evaluate(Q[0]) <= 0.0:
        return
    s = disc.first_exit(Q)
    if s is None:
        return
    eps = 1e-7
    before = disc.path_values(Q, max(s - eps, 0.0))[0]
    after = disc.path_values(Q, min(s + eps, 1.0))[0]
    assert before >= after
    assert abs(disc.path_values(Q, s)[0]) <= 1e-8


def test_catalog_spectral_constraint_finds_exit():
    ex = build_example("fig2-spectral")
    c = ex.constraints[0]
    # along q1 = q2 = t the spectral radius 0.85 + sqrt(0.0025 + t^2) reaches 1 at t = sqrt(0.02)
    step = linear_step([0.0, 0.0], [1.0, 1.0])
    s = locate_collision(c, step, I2)
    assert s == pytest.approx(math.sqrt(0.02), abs=1e-9)
