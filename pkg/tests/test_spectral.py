"""Spectral core: transforms, multipliers, projection, advection, dealiasing."""

import numpy as np
import pytest

from anidiff.spectral import (
    Grid,
    SpectralField,
    VectorField,
    dealias,
    derivative,
    from_physical,
    hermitian_symmetrize,
    inner,
    is_hermitian,
    l2_norm,
    lambda_dir,
    lambda_full,
    leray_project,
    nonlinear_advection,
    random_field,
    solenoidal_defect,
    to_physical,
    vector_inner,
)


def mode_index(grid, xi):
    """Array index of integer mode vector xi in FFT ordering."""
    return tuple(x % n for x, n in zip(xi, grid.shape))


def single_mode_field(grid, xi, amplitude=1.0):
    """Real field amplitude*cos(kappa.x): the +/-xi conjugate pair."""
    c = np.zeros(grid.shape, dtype=complex)
    c[mode_index(grid, xi)] = amplitude / 2.0
    c[mode_index(grid, tuple(-x for x in xi))] = amplitude / 2.0
    return SpectralField(grid, c)


GRID = Grid.cube(16)


class TestGrid:
    def test_validation(self):
        with pytest.raises(ValueError):
            Grid.cube(3)
        with pytest.raises(ValueError):
            Grid(8, 8, 10, box_length=-1.0)
        with pytest.raises(ValueError):
            Grid.cube(8, dealias_fraction=0.0)

    def test_wavenumber_scaling(self):
        g = Grid.cube(8, box_length=4 * np.pi)
        assert np.isclose(g.kappa(1)[1], 0.5)
        assert np.isclose(Grid.cube(8).kappa(2)[1], 1.0)


class TestTransforms:
    def test_round_trip(self):
        rng = np.random.default_rng(3)
        f = random_field(GRID, rng)
        g = from_physical(GRID, to_physical(f))
        assert np.max(np.abs(g.coeffs - f.coeffs)) <= 1e-12 * np.max(np.abs(f.coeffs))

    def test_parseval(self):
        rng = np.random.default_rng(4)
        f = random_field(GRID, rng)
        phys = to_physical(f)
        phys_norm = np.sqrt(np.sum(phys**2) * GRID.cell_volume)
        assert np.isclose(phys_norm, l2_norm(f), rtol=1e-12)

    def test_single_mode_physical_values(self):
        f = single_mode_field(GRID, (1, 0, 0), amplitude=2.0)
        x = np.linspace(0, 2 * np.pi, GRID.n1, endpoint=False)
        assert np.allclose(to_physical(f)[:, 0, 0], 2.0 * np.cos(x), atol=1e-13)


class TestMultipliers:
    def test_lambda_dir_single_mode(self):
        f = single_mode_field(GRID, (2, 0, 0))
        g = lambda_dir(f, 1, 2.5)
        idx = mode_index(GRID, (2, 0, 0))
        assert np.isclose(g.coeffs[idx], f.coeffs[idx] * 2.0**2.5)

    def test_lambda_dir_gamma_zero_identity(self):
        rng = np.random.default_rng(5)
        f = random_field(GRID, rng, mean_free=False)
        g = lambda_dir(f, 1, 0.0)
        assert np.array_equal(g.coeffs, f.coeffs)

    def test_lambda_dir_zero_wavenumber_annihilated(self):
        f = single_mode_field(GRID, (0, 3, 1))
        g = lambda_dir(f, 1, 2.5)
        assert np.all(g.coeffs == 0)

    def test_lambda_dir_invalid_axis(self):
        f = SpectralField.zeros(GRID)
        with pytest.raises(ValueError):
            lambda_dir(f, 4, 1.0)
        with pytest.raises(ValueError):
            lambda_dir(f, 1, -0.5)

    def test_lambda_full_examples(self):
        f = single_mode_field(GRID, (3, 4, 0))
        idx = mode_index(GRID, (3, 4, 0))
        assert np.isclose(lambda_full(f, 1.0).coeffs[idx], f.coeffs[idx] * 5.0)
        rng = np.random.default_rng(6)
        g = random_field(GRID, rng, mean_free=False)
        assert np.array_equal(lambda_full(g, 0.0).coeffs, g.coeffs)

    def test_lambda_full_laplacian_symbol(self):
        f = single_mode_field(GRID, (2, 1, 3))
        idx = mode_index(GRID, (2, 1, 3))
        assert np.isclose(lambda_full(f, 2.0).coeffs[idx], f.coeffs[idx] * 14.0)

    def test_lambda_dir_additivity(self):
        rng = np.random.default_rng(7)
        f = random_field(GRID, rng)
        a = lambda_dir(lambda_dir(f, 2, 0.75), 2, 0.5)
        b = lambda_dir(f, 2, 1.25)
        assert np.allclose(a.coeffs, b.coeffs, rtol=1e-12, atol=1e-16)

    def test_multipliers_commute(self):
        rng = np.random.default_rng(8)
        f = random_field(GRID, rng)
        a = lambda_dir(lambda_full(f, 1.5), 1, 2.5)
        b = lambda_full(lambda_dir(f, 1, 2.5), 1.5)
        assert np.allclose(a.coeffs, b.coeffs, rtol=1e-12, atol=1e-16)


class TestDerivative:
    def test_constant_annihilated(self):
        c = np.zeros(GRID.shape, dtype=complex)
        c[0, 0, 0] = 4.2
        assert np.all(derivative(SpectralField(GRID, c), 1).coeffs == 0)

    def test_sin_to_cos(self):
        x = np.linspace(0, 2 * np.pi, GRID.n1, endpoint=False)
        phys = np.broadcast_to(np.sin(x)[:, None, None], GRID.shape)
        f = from_physical(GRID, np.array(phys))
        d = to_physical(derivative(f, 1))
        expected = np.broadcast_to(np.cos(x)[:, None, None], GRID.shape)
        assert np.max(np.abs(d - expected)) <= 1e-12

    def test_mixed_partials_commute(self):
        rng = np.random.default_rng(9)
        f = random_field(GRID, rng)
        a = derivative(derivative(f, 1), 2).coeffs
        b = derivative(derivative(f, 2), 1).coeffs
        # floating-point multiplication is non-associative: allow a few ulps
        assert np.allclose(a, b, rtol=1e-15, atol=1e-18)


class TestDealias:
    def test_rule_n12(self):
        g = Grid.cube(12)
        rng = np.random.default_rng(10)
        c = rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape)
        f = dealias(SpectralField(g, c))
        modes = [g.modes(a) for a in (1, 2, 3)]
        for idx in np.ndindex(*g.shape):
            xi = [int(modes[a][idx[a]]) for a in range(3)]
            if any(abs(x) > 4 for x in xi):
                assert f.coeffs[idx] == 0
            else:
                assert f.coeffs[idx] == c[idx]

    def test_idempotent(self):
        rng = np.random.default_rng(11)
        f = random_field(GRID, rng)
        assert np.array_equal(dealias(f).coeffs, f.coeffs)

    def test_fraction_one_identity(self):
        g = Grid.cube(8, dealias_fraction=1.0)
        rng = np.random.default_rng(12)
        c = rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape)
        f = SpectralField(g, c)
        assert np.array_equal(dealias(f).coeffs, c)


class TestHermitian:
    def test_symmetrize_then_real(self):
        rng = np.random.default_rng(13)
        c = rng.standard_normal(GRID.shape) + 1j * rng.standard_normal(GRID.shape)
        f = hermitian_symmetrize(SpectralField(GRID, c))
        assert is_hermitian(f)
        phys = np.fft.ifftn(f.coeffs * GRID.size)
        assert np.max(np.abs(phys.imag)) <= 1e-12 * np.max(np.abs(phys.real))

    def test_random_field_is_hermitian(self):
        f = random_field(GRID, np.random.default_rng(14))
        assert is_hermitian(f)


class TestLeray:
    def test_gradient_killed(self):
        rng = np.random.default_rng(15)
        phi = random_field(GRID, rng)
        v = VectorField(derivative(phi, 1), derivative(phi, 2), derivative(phi, 3))
        p = leray_project(v)
        scale = max(np.max(np.abs(c.coeffs)) for c in v.components)
        assert all(np.max(np.abs(c.coeffs)) <= 1e-12 * scale for c in p.components)

    def test_mean_preserved(self):
        v = VectorField.zeros(GRID)
        v.c1.coeffs[0, 0, 0] = 1.5
        p = leray_project(v)
        assert p.c1.coeffs[0, 0, 0] == 1.5

    def test_idempotent(self):
        rng = np.random.default_rng(16)
        v = VectorField(*(random_field(GRID, rng) for _ in range(3)))
        p1 = leray_project(v)
        p2 = leray_project(p1)
        scale = max(np.max(np.abs(c.coeffs)) for c in p1.components)
        diff = max(
            np.max(np.abs(a.coeffs - b.coeffs))
            for a, b in zip(p1.components, p2.components)
        )
        assert diff <= 1e-12 * scale

    def test_divergence_below_tolerance(self):
        rng = np.random.default_rng(17)
        v = VectorField(*(random_field(GRID, rng) for _ in range(3)))
        assert solenoidal_defect(leray_project(v)) <= 1e-10

    def test_self_adjoint(self):
        rng = np.random.default_rng(18)
        v = VectorField(*(random_field(GRID, rng) for _ in range(3)))
        w = VectorField(*(random_field(GRID, rng) for _ in range(3)))
        a = vector_inner(leray_project(v), w)
        b = vector_inner(v, leray_project(w))
        assert np.isclose(a, b, rtol=1e-12)


class TestAdvection:
    def test_zero_input(self):
        v = VectorField.zeros(GRID)
        w = VectorField.zeros(GRID)
        out = nonlinear_advection(v, w)
        assert all(np.all(c.coeffs == 0) for c in out.components)

    def test_grid_mismatch(self):
        v = VectorField.zeros(GRID)
        w = VectorField.zeros(Grid.cube(8))
        with pytest.raises(ValueError):
            nonlinear_advection(v, w)

    def test_two_mode_convolution_oracle(self):
        # v1 = cos(x1), w2 = cos(2 x2): (v.grad)w has only component 2,
        # v1 * d1 w2 = 0; with w2 = cos(x1) instead: v1 d1 w2 = -cos(x1) sin(x1)
        # Use v = (cos(x1), 0, 0), w = (0, cos(x1), 0):
        # (v.grad)w = (0, cos(x1) * (-sin(x1)), 0) = (0, -sin(2 x1)/2, 0)
        v = VectorField(single_mode_field(GRID, (1, 0, 0)), SpectralField.zeros(GRID), SpectralField.zeros(GRID))
        w = VectorField(SpectralField.zeros(GRID), single_mode_field(GRID, (1, 0, 0)), SpectralField.zeros(GRID))
        out = nonlinear_advection(v, w)
        expected = np.zeros(GRID.shape, dtype=complex)
        # -sin(2x1)/2 = (i/4) e^{2ix1} - (i/4) e^{-2ix1}
        expected[mode_index(GRID, (2, 0, 0))] = 0.25j
        expected[mode_index(GRID, (-2, 0, 0))] = -0.25j
        assert np.allclose(out.c2.coeffs, expected, atol=1e-14)
        assert np.max(np.abs(out.c1.coeffs)) <= 1e-15
        assert np.max(np.abs(out.c3.coeffs)) <= 1e-15

    def test_cross_mode_convolution_oracle(self):
        # v = (cos(x2), 0, 0), w = (0, 0, cos(x1)):
        # (v.grad)w_3 = cos(x2) * (-sin(x1)) = -(1/2)[sin(x1+x2) + sin(x1-x2)]
        v = VectorField(single_mode_field(GRID, (0, 1, 0)), SpectralField.zeros(GRID), SpectralField.zeros(GRID))
        w = VectorField(SpectralField.zeros(GRID), SpectralField.zeros(GRID), single_mode_field(GRID, (1, 0, 0)))
        out = nonlinear_advection(v, w)
        expected = np.zeros(GRID.shape, dtype=complex)
        for xi in [(1, 1, 0), (1, -1, 0)]:
            expected[mode_index(GRID, xi)] = 0.25j
            expected[mode_index(GRID, tuple(-x for x in xi))] = -0.25j
        assert np.allclose(out.c3.coeffs, expected, atol=1e-14)

    def test_energy_flux_skew_symmetry(self):
        rng = np.random.default_rng(19)
        v = leray_project(VectorField(*(random_field(GRID, rng) for _ in range(3))))
        w = VectorField(*(random_field(GRID, rng) for _ in range(3)))
        flux = vector_inner(nonlinear_advection(v, w), w)
        scale = l2_norm(v) * l2_norm(w) ** 2
        assert abs(flux) <= 1e-10 * scale


class TestVectorField:
    def test_shared_grid_enforced(self):
        with pytest.raises(ValueError):
            VectorField(
                SpectralField.zeros(GRID),
                SpectralField.zeros(Grid.cube(8)),
                SpectralField.zeros(GRID),
            )
