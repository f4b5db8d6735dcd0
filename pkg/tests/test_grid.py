import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cknlab.blockgeom import BlockDecomposition as B
from cknlab.errors import DomainError, MemoryGuardError
from cknlab.grid import ReducedGrid, build_grid, integrate, refine


def gaussian(grid):
    return np.broadcast_to(np.exp(-sum(r**2 for r in grid.mesh())), grid.shape)


def test_build_shape_and_nodes():
    g = build_grid(B((2, 2)), 1e-3, 1e3, 64)
    assert g.shape == (64, 64) and g.size == 64**2
    for r in g.axes:
        assert np.all(np.diff(r) > 0)
        assert r[0] == 1e-3 and r[-1] == 1e3
        assert np.allclose(np.diff(np.log(r)), np.log(1e6) / 63)
    assert all(np.all(mu > 0) for mu in g.measure)
    assert g.angular_constant == pytest.approx((2 * math.pi) ** 2)


@pytest.mark.parametrize(
    "args, err",
    [
        ((B((2, 2)), 1.0, 1.0, 16), DomainError),
        ((B((2, 2)), 2.0, 1.0, 16), DomainError),
        ((B((2, 2)), 0.0, 1.0, 16), DomainError),
        ((B((2, 2)), 1.0, 2.0, 7), DomainError),
        ((B((2, 2, 2, 2)), 1.0, 2.0, 256), MemoryGuardError),
        ((B((2, 2, 2)), 1.0, 2.0, 256), MemoryGuardError),
    ],
)
def test_build_rejects(args, err):
    with pytest.raises(err):
        build_grid(*args)


def test_memory_guard_is_a_memory_error():
    with pytest.raises(MemoryError):
        build_grid(B((2, 2, 2, 2)), 1.0, 2.0, 256)


def test_integrate_zero_and_linearity():
    g = build_grid(B((3, 2)), 0.1, 5.0, 17)
    assert integrate(g, np.zeros(g.shape)) == 0.0
    f = np.exp(-(g.mesh()[0] - 1) ** 2) * np.exp(-g.mesh()[1])
    assert integrate(g, 2 * f) == 2 * integrate(g, f)
    with pytest.raises(DomainError):
        integrate(g, np.zeros((3, 3)))
    bad = np.zeros(g.shape)
    bad[1, 1] = np.nan
    with pytest.raises(DomainError):
        integrate(g, bad)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_integrate_monotone(seed):
    g = build_grid(B((2, 3)), 0.1, 4.0, 12)
    rng = np.random.default_rng(seed)
    f = rng.normal(size=g.shape)
    h = f + np.abs(rng.normal(size=g.shape))
    assert integrate(g, f) <= integrate(g, h)
    assert integrate(g, np.abs(f)) >= 0


def test_gaussian_oracle():
    # int_{R^4} exp(-|x|^2) dx = pi^2
    g = refine(build_grid(B((2, 2)), 1e-4, 8.0, 65))
    assert integrate(g, gaussian(g)) == pytest.approx(math.pi**2, rel=1e-4)
    # and in R^5 = R^3 x R^2: pi^{5/2}
    g = build_grid(B((3, 2)), 1e-4, 8.0, 129)
    assert integrate(g, gaussian(g)) == pytest.approx(math.pi**2.5, rel=1e-4)


def test_trapezoid_second_order():
    # f = 1 on the box [1,2]^2: exact value is the product of two annuli 3*pi
    g = build_grid(B((2, 2)), 1.0, 2.0, 9)
    errs = []
    for _ in range(4):
        errs.append(abs(integrate(g, np.ones(g.shape)) - 9 * math.pi**2))
        g = refine(g)
    orders = [math.log2(errs[k] / errs[k + 1]) for k in range(3)]
    assert all(1.8 <= o <= 2.2 for o in orders)


def test_refine_nested():
    g = build_grid(B((2, 2)), 1e-2, 1e2, 33)
    g2 = refine(g)
    assert g2.nodes_per_axis == 65
    assert np.allclose(g2.axes[0][::2], g.axes[0], rtol=1e-14)
    assert refine(g2).size == 129**2
    v = build_grid(B((2, 2)), 0.0, 3.0, 16, spacing="volume")
    assert refine(v).nodes_per_axis == 32


def test_volume_grid_equal_measure():
    g = build_grid(B((3, 2)), 0.0, 2.0, 20, spacing="volume")
    for i, gam in enumerate((3, 2)):
        mu = g.measure[i]
        assert np.allclose(mu, mu[0], rtol=0, atol=0)
        assert mu.sum() == pytest.approx(2.0**gam / gam)


def test_spec_round_trip_and_digest():
    g = build_grid(B((2, 3)), 1e-2, 1e2, 17)
    spec = json.loads(g.to_json())
    assert spec == {"gammas": [2, 3], "r_min": 0.01, "r_max": 100.0, "nodes_per_axis": 17, "spacing": "log"}
    h = ReducedGrid.from_spec(spec)
    assert h == g and h.digest() == g.digest()
    assert all(np.array_equal(a, b) for a, b in zip(h.axes, g.axes))
    with pytest.raises(DomainError):
        ReducedGrid.from_spec({"gammas": [2, 2]})


def test_integrate_deterministic():
    g = build_grid(B((2, 2, 2)), 0.1, 3.0, 40)
    f = gaussian(g)
    vals = {integrate(g, f) for _ in range(3)}
    assert len(vals) == 1
