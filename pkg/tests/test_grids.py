import math

import numpy as np
import pytest

from otnodal import (
    AllConstant,
    GridFunction,
    NotZeroMean,
    load_grid,
    make_zero_mean,
    nodal_measure,
    norms,
    save_grid,
    split_signs,
)
from otnodal.families import trig_polynomial


def grid2(n, fn):
    x = (np.arange(n) + 0.5) / n
    X, Y = np.meshgrid(x, x, indexing="ij")
    return GridFunction(2, n, fn(X, Y))


def grid1(n, fn):
    x = (np.arange(n) + 0.5) / n
    return GridFunction(1, n, fn(x))


def grid3(n, fn):
    x = (np.arange(n) + 0.5) / n
    X, Y, Z = np.meshgrid(x, x, x, indexing="ij")
    return GridFunction(3, n, fn(X, Y, Z))


class TestMakeZeroMean:
    def test_constant_rejected(self):
        f = GridFunction(1, 4, np.full(4, 5.0))
        with pytest.raises(AllConstant):
            make_zero_mean(f)

    def test_already_zero_mean_unchanged(self):
        f = GridFunction(1, 2, np.array([1.0, -1.0]))
        g = make_zero_mean(f)
        assert np.array_equal(g.values, f.values)

    def test_shifts_by_mean(self):
        f = GridFunction(1, 2, np.array([3.0, 1.0]))
        g = make_zero_mean(f)
        assert np.allclose(g.values, [1.0, -1.0])

    def test_certifies_mean(self):
        f = make_zero_mean(grid2(64, lambda x, y: np.sin(7 * x) + 0.3 * y))
        assert f.is_zero_mean()


class TestSplitSigns:
    def test_two_cell_example(self):
        f = GridFunction(1, 2, np.array([1.0, -1.0]))
        mu, nu = split_signs(f)
        assert np.allclose(mu.points, [[0.25]]) and np.allclose(mu.masses, [0.5])
        assert np.allclose(nu.points, [[0.75]]) and np.allclose(nu.masses, [0.5])

    def test_cosine_mass(self):
        # integral of cos(pi x) over [0, 1/2] is 1/pi
        f = grid1(1024, lambda x: np.cos(np.pi * x))
        mu, nu = split_signs(f)
        assert mu.total_mass() == pytest.approx(1 / math.pi, rel=1e-4)
        assert nu.total_mass() == pytest.approx(1 / math.pi, rel=1e-4)

    def test_zero_cell_in_neither(self):
        f = GridFunction(1, 4, np.array([2.0, 0.0, -1.0, -1.0]))
        mu, nu = split_signs(f)
        assert mu.size == 1 and nu.size == 2

    def test_requires_zero_mean(self):
        f = GridFunction(1, 2, np.array([3.0, 1.0]))
        with pytest.raises(NotZeroMean):
            split_signs(f)

    def test_mass_balance(self):
        f = trig_polynomial(2, 64, seed=11)
        mu, nu = split_signs(f)
        l1, _ = norms(f)
        assert abs(mu.total_mass() - nu.total_mass()) <= f.mean_tol * l1


class TestNorms:
    def test_simple(self):
        assert norms(GridFunction(1, 2, np.array([1.0, -1.0]))) == (1.0, 1.0)

    def test_cosine(self):
        l1, linf = norms(grid1(1024, lambda x: np.cos(np.pi * x)))
        assert l1 == pytest.approx(2 / math.pi, abs=1e-3)
        assert linf == pytest.approx(1.0, rel=1e-5)

    def test_zero(self):
        assert norms(GridFunction(1, 3, np.zeros(3))) == (0.0, 0.0)

    def test_scaling_covariance(self):
        f = trig_polynomial(2, 32, seed=5)
        l1, linf = norms(f)
        g = f.with_values(-2.5 * f.values)
        assert norms(g) == (2.5 * l1, 2.5 * linf)


class TestNodalMeasure:
    def test_line(self):
        f = grid2(128, lambda x, y: x - 0.5)
        assert nodal_measure(f) == pytest.approx(1.0, abs=1e-6)

    def test_circle(self):
        f = grid2(256, lambda x, y: 0.3**2 - ((x - 0.5) ** 2 + (y - 0.5) ** 2))
        assert nodal_measure(f) == pytest.approx(2 * math.pi * 0.3, rel=0.02)

    def test_two_lines(self):
        f = grid2(256, lambda x, y: np.cos(np.pi * x) * np.cos(np.pi * y))
        assert nodal_measure(f) == pytest.approx(2.0, rel=0.01)

    @pytest.mark.parametrize("k", [1, 2, 5, 11])
    @pytest.mark.parametrize("mult", [4, 8, 13])
    def test_1d_cosine_count(self, k, mult):
        f = grid1(mult * k, lambda x: np.cos(np.pi * k * x))
        assert nodal_measure(f) == k

    def test_identically_signed_is_zero(self):
        assert nodal_measure(GridFunction(2, 16, np.ones((16, 16)))) == 0.0

    def test_scale_invariance(self):
        f = trig_polynomial(2, 64, seed=3)
        assert nodal_measure(f.with_values(7.0 * f.values)) == pytest.approx(
            nodal_measure(f), rel=1e-12
        )

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_refinement_stability(self, seed):
        a = nodal_measure(trig_polynomial(2, 128, seed=seed))
        b = nodal_measure(trig_polynomial(2, 256, seed=seed))
        assert abs(a - b) <= 0.05 * b

    def test_plane_3d(self):
        f = grid3(64, lambda x, y, z: x - 0.5)
        assert nodal_measure(f) == pytest.approx(1.0, rel=1e-6)

    def test_sphere_3d(self):
        r = 0.3
        f = grid3(96, lambda x, y, z: r**2 - ((x - 0.5) ** 2 + (y - 0.5) ** 2 + (z - 0.5) ** 2))
        assert nodal_measure(f) == pytest.approx(4 * math.pi * r**2, rel=0.01)


def test_grid_roundtrip(tmp_path):
    f = trig_polynomial(2, 32, seed=9)
    path = tmp_path / "f.csv"
    save_grid(f, path)
    g = load_grid(path)
    assert g.dim == 2 and g.n == 32
    assert np.array_equal(g.values, f.values)
    assert path.read_text().splitlines()[0] == "2,32"
