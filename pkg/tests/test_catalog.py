import math

import numpy as np
import pytest

from ngrhmc.catalog import (
    AR1_SEED,
    TOY_IID_Y,
    ar1_data,
    build_example,
    example_names,
    ldl_pack,
    ldl_precision,
    WishartLDL,
)
from ngrhmc.constraints import Linear, NonlinearAffine
from ngrhmc.errors import UnknownExample

# hand-written maps from the unconstrained twin parameters u to the original q
TWIN_MAPS = {
    "toy-iid": lambda u: np.array([math.exp(u[0]), u[1]]),
    "toy-ar1": lambda u: np.array([1.0 / (1.0 + math.exp(-u[0])), u[1]]),
    "toy-mixture": lambda u: np.array([u[0], u[0] + math.exp(u[1]), u[2]]),
}


def numeric_jacobian(f, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        cols.append((np.asarray(f(x + e)) - np.asarray(f(x - e))) / (2 * h))
    return np.column_stack(cols)


def test_names_are_stable():
    names = example_names()
    assert len(names) == len(set(names)) == 18
    for required in ("half-normal", "fig1-ellipse", "fig2-spectral", "toy-ar1", "toy-mixture-transformed"):
        assert required in names


def test_unknown_example():
    with pytest.raises(UnknownExample) as info:
        build_example("nope")
    assert "half-normal" in str(info.value)


@pytest.mark.parametrize("name", example_names())
def test_start_points_are_strictly_feasible(name):
    ex = build_example(name)
    assert ex.q0.shape == (ex.dim,)
    for c in ex.constraints:
        assert c.dim == ex.dim
        assert c.evaluate(ex.q0) > 0.0
    assert math.isfinite(ex.model.log_density(ex.q0))


def test_half_normal_entry():
    ex = build_example("half-normal")
    assert ex.dim == 1
    assert len(ex.constraints) == 1 and isinstance(ex.constraints[0], Linear)
    mean, var = ex.known_moments
    assert mean[0] == pytest.approx(0.797885, abs=1e-6)
    assert var[0, 0] == pytest.approx(0.363380, abs=1e-6)


def test_fig1_entry():
    ex = build_example("fig1-ellipse")
    c = ex.constraints[0]
    assert isinstance(c, NonlinearAffine)
    q = np.array([0.3, -0.4])
    assert c.evaluate(q) == pytest.approx(0.55 - 0.5 * 0.09 - 0.16)


def test_toy_ar1_entry():
    ex = build_example("toy-ar1")
    y = np.asarray(ex.reference_data["y"])
    assert ex.reference_data["seed"] == AR1_SEED
    assert y.size == 100
    assert np.array_equal(y, ar1_data(100, 0.99, 0.1, AR1_SEED))
    assert len(ex.constraints) == 2
    # 0 < phi < 1 as two linear constraints
    assert ex.constraints[0].evaluate(np.array([-0.1, 0.0])) < 0
    assert ex.constraints[1].evaluate(np.array([1.1, 0.0])) < 0
    assert tuple(ex.model.monitor_names) == ("phi", "sigma")


def test_toy_iid_data():
    ex = build_example("toy-iid")
    assert ex.reference_data["y"] == list(TOY_IID_Y) == [-1.0, -0.3, 0.3, 1.2]


@pytest.mark.parametrize("name", list(TWIN_MAPS))
def test_twins_point_at_each_other(name):
    ex = build_example(name)
    tw = build_example(ex.twin)
    assert tw.twin == name
    assert tw.constraints == []
    assert tw.model.monitor_names == ex.model.monitor_names


@pytest.mark.parametrize("name", list(TWIN_MAPS))
def test_twin_density_is_the_change_of_variables(name):
    ex = build_example(name)
    tw = build_example(ex.twin)
    fwd = TWIN_MAPS[name]
    rng = np.random.default_rng(0)
    diffs = []
    for _ in range(20):
        u = tw.q0 + 0.3 * rng.standard_normal(tw.dim)
        q = fwd(u)
        logjac = math.log(abs(np.linalg.det(numeric_jacobian(fwd, u))))
        diffs.append(tw.model.log_density(u) - ex.model.log_density(q) - logjac)
    # equal up to a constant (and the catalog uses none)
    assert np.ptp(diffs) < 1e-6
    assert abs(diffs[0]) < 1e-6


@pytest.mark.parametrize("name", list(TWIN_MAPS))
def test_twin_monitors_agree_at_mapped_points(name):
    ex = build_example(name)
    tw = build_example(ex.twin)
    fwd = TWIN_MAPS[name]
    rng = np.random.default_rng(1)
    for _ in range(10):
        u = tw.q0 + 0.3 * rng.standard_normal(tw.dim)
        a = [m(u) for m in tw.model.monitors]
        b = [m(fwd(u)) for m in ex.model.monitors]
        assert np.allclose(a, b, rtol=1e-12)


def test_ldl_round_trip():
    P = np.array([[2.0, -0.3, 0.1], [-0.3, 1.5, -0.2], [0.1, -0.2, 1.0]])
    assert np.allclose(ldl_precision(ldl_pack(P), 3), P)


def test_ldl_log_jacobian():
    m = 3
    il, jl = np.tril_indices(m)
    rng = np.random.default_rng(2)
    for _ in range(5):
        z = rng.normal(0.0, 0.5, m * (m + 1) // 2)
        J = numeric_jacobian(lambda x: ldl_precision(x, m)[il, jl], z)
        numeric = math.log(abs(np.linalg.det(J)))
        formula = float(np.arange(m, 0, -1) @ z[:m])
        assert numeric == pytest.approx(formula, abs=1e-6)


def test_wishart_ldl_includes_the_jacobian():
    m = 2
    core = WishartLDL(m, 0.0, np.zeros((m, m)))
    z = np.array([0.3, -0.2, 0.7])
    # with no likelihood or prior terms only the log-Jacobian remains
    assert core.log_density(z) == pytest.approx(2 * 0.3 + 1 * -0.2)
