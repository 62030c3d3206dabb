import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_coeffs
from sqgsteady.spectral import (HighWeight, LambdaPower, LowWeight, PhysicalField,
                                RieszPerp, Semigroup, SpectralField, apply_multiplier,
                                as_physical, check_dissipation, dealias, divergence,
                                forward_transform, hermitian_defect, inner,
                                inverse_transform, low_high_split, make_grid, norm,
                                riesz_perp, x_norm)


def cos_mode(grid, m1, m2):
    x1, x2 = grid.coords
    return PhysicalField(np.cos(grid.k0 * (m1 * x1 + m2 * x2)), grid)


class TestGrid:
    def test_lattice_and_mask(self, grid16):
        assert grid16.cutoff_index == 5
        assert grid16.k_max == pytest.approx(5.0)
        assert grid16.mask.sum() == 11 * 11
        assert grid16.j1[1, 0] == 1 and grid16.j1[-1, 0] == -1

    def test_box_length_scales_wavenumbers(self):
        g = make_grid(16, box_length=4 * math.pi)
        assert g.k0 == pytest.approx(0.5)
        assert g.kmag[2, 0] == pytest.approx(1.0)

    @pytest.mark.parametrize("n", [6, 7, 15])
    def test_bad_n(self, n):
        with pytest.raises(ValueError):
            make_grid(n)

    @pytest.mark.parametrize("kw", [{"box_length": 0.0}, {"dealias_fraction": 0.0},
                                    {"dealias_fraction": 1.5}])
    def test_bad_params(self, kw):
        with pytest.raises(ValueError):
            make_grid(16, **kw)

    def test_full_mask_at_fraction_one(self):
        g = make_grid(16, dealias_fraction=1.0)
        assert g.mask.all()

    def test_power_zero_mode(self, grid16):
        for s in (-1.0, 0.0, 0.5):
            assert grid16.power(s)[0, 0] == 0.0


class TestTransforms:
    def test_round_trip(self, grid32):
        rng = np.random.default_rng(0)
        v = rng.standard_normal((32, 32))
        back = inverse_transform(forward_transform(PhysicalField(v, grid32)))
        np.testing.assert_allclose(back.values, v, atol=1e-13)

    def test_parseval_single_mode(self, grid32):
        # ||cos(3x + 4y)||_2^2 = L^2 / 2
        f = cos_mode(grid32, 3, 4)
        assert norm(f, "l2") ** 2 == pytest.approx(2 * math.pi ** 2, rel=1e-14)

    def test_nonfinite_rejected(self, grid16):
        v = np.zeros((16, 16))
        v[3, 3] = np.nan
        with pytest.raises(ValueError):
            PhysicalField(v, grid16)

    def test_hermitian_defect(self, grid16):
        c = forward_transform(cos_mode(grid16, 1, 2)).coeffs
        assert hermitian_defect(c) < 1e-15
        c = c.copy()
        c[1, 2] += 1j
        assert hermitian_defect(c) > 0.1

    def test_grid_mismatch(self, grid16, grid32):
        with pytest.raises(ValueError):
            SpectralField.zeros(grid16) + SpectralField.zeros(grid32)


class TestMultipliers:
    @pytest.mark.parametrize("s", [-1.0, 0.5, 1.0, 1.5])
    def test_lambda_single_mode(self, grid32, s):
        f = forward_transform(cos_mode(grid32, 3, 4))
        got = as_physical(apply_multiplier(f, LambdaPower(s))).values
        np.testing.assert_allclose(got, 5.0 ** s * cos_mode(grid32, 3, 4).values, atol=1e-12)

    def test_riesz_single_mode(self, grid32):
        # R-perp cos(k.x) = (k2, -k1)/|k| sin(k.x)
        x1, x2 = grid32.coords
        f = forward_transform(cos_mode(grid32, 3, 4))
        u1, u2 = riesz_perp(f)
        s = np.sin(3 * x1 + 4 * x2)
        np.testing.assert_allclose(as_physical(u1).values, 0.8 * s, atol=1e-13)
        np.testing.assert_allclose(as_physical(u2).values, -0.6 * s, atol=1e-13)

    def test_riesz_symbol_components(self, grid16):
        f = SpectralField(random_coeffs(grid16, 1), grid16)
        u1, u2 = riesz_perp(f)
        np.testing.assert_allclose(apply_multiplier(f, RieszPerp(1)).coeffs, u1.coeffs)
        np.testing.assert_allclose(apply_multiplier(f, RieszPerp(2)).coeffs, u2.coeffs)

    @pytest.mark.parametrize("alpha", [1.0, 1.5])
    def test_semigroup_single_mode(self, grid32, alpha):
        f = forward_transform(cos_mode(grid32, 3, 4))
        got = apply_multiplier(f, Semigroup(0.2, 1.5, alpha))
        want = math.exp(-1.5 * 0.2 * 5.0 ** alpha)
        np.testing.assert_allclose(got.coeffs, want * f.coeffs, atol=1e-15)

    def test_semigroup_zero_time_identity(self, grid16):
        f = SpectralField(random_coeffs(grid16, 2), grid16)
        np.testing.assert_array_equal(apply_multiplier(f, Semigroup(0.0, 1.0, 1.0)).coeffs,
                                      f.coeffs)

    @pytest.mark.parametrize("kappa,alpha", [(0.0, 1.0), (-1.0, 1.0), (1.0, 2.0), (1.0, 0.5)])
    def test_dissipation_params(self, kappa, alpha):
        with pytest.raises(ValueError):
            check_dissipation(kappa, alpha)
        with pytest.raises(ValueError):
            Semigroup(0.1, kappa, alpha)

    def test_weights_partition(self, grid16):
        phi = LowWeight().symbol(grid16)
        psi = HighWeight().symbol(grid16)
        np.testing.assert_allclose(phi + psi, 1.0, atol=1e-15)
        k = grid16.kmag
        # psi <= |k|^2 on |k| <= 1
        assert np.all(psi[k <= 1] <= k[k <= 1] ** 2 + 1e-15)

    def test_low_high_split_sums(self, grid16):
        f = SpectralField(random_coeffs(grid16, 3), grid16)
        low, high = low_high_split(f)
        np.testing.assert_allclose((low + high).coeffs, f.coeffs, atol=1e-15)


@given(seed=st.integers(0, 2 ** 32 - 1))
def test_riesz_isometry_and_divergence(seed):
    g = make_grid(16)
    f = SpectralField(random_coeffs(g, seed), g)
    u = riesz_perp(f)
    assert norm(u, "l2") == pytest.approx(norm(f, "l2"), rel=1e-12)
    assert norm(divergence(u), "l2") <= 1e-12 * norm(f, "hs", s=1.0)


@given(seed=st.integers(0, 2 ** 32 - 1), s=st.sampled_from([-1.0, -0.5, 0.5, 1.0]))
def test_lambda_powers_compose(seed, s):
    g = make_grid(16)
    f = SpectralField(random_coeffs(g, seed), g)
    back = apply_multiplier(apply_multiplier(f, LambdaPower(s)), LambdaPower(-s))
    np.testing.assert_allclose(back.coeffs, f.coeffs, atol=1e-13)


@given(seed=st.integers(0, 2 ** 32 - 1))
def test_dealias_idempotent(seed):
    g = make_grid(16)
    rng = np.random.default_rng(seed)
    f = forward_transform(PhysicalField(rng.standard_normal((16, 16)), g))
    once = dealias(f)
    np.testing.assert_array_equal(dealias(once).coeffs, once.coeffs)
    assert not np.any(once.coeffs[~g.mask])


@given(seed=st.integers(0, 2 ** 32 - 1))
def test_inner_matches_physical_quadrature(seed):
    g = make_grid(16)
    a = SpectralField(random_coeffs(g, seed), g)
    b = SpectralField(random_coeffs(g, seed + 1), g)
    dx2 = (g.box_length / g.n) ** 2
    want = dx2 * float(np.sum(as_physical(a).values * as_physical(b).values))
    assert inner(a, b) == pytest.approx(want, rel=1e-12, abs=1e-12)


class TestNorms:
    def test_vector_l2(self, grid16):
        f = SpectralField(random_coeffs(grid16, 4), grid16)
        assert norm((f, f), "l2") == pytest.approx(math.sqrt(2) * norm(f, "l2"))

    def test_lp_matches_l2(self, grid16):
        f = SpectralField(random_coeffs(grid16, 5), grid16)
        assert norm(f, "lp", p=2) == pytest.approx(norm(f, "l2"), rel=1e-12)

    def test_linf_and_lp_inf(self, grid16):
        f = cos_mode(grid16, 1, 0)
        assert norm(f, "linf") == pytest.approx(1.0)
        assert norm(f, "lp", p=math.inf) == pytest.approx(1.0)

    def test_lp_zero(self, grid16):
        assert norm(SpectralField.zeros(grid16), "lp", p=4) == 0.0

    @pytest.mark.parametrize("kw", [{"kind": "hs"}, {"kind": "lp"}, {"kind": "lp", "p": 0.5},
                                    {"kind": "h1"}])
    def test_bad_kind(self, grid16, kw):
        with pytest.raises(ValueError):
            norm(SpectralField.zeros(grid16), **kw)

    def test_x_norm_single_mode(self, grid64):
        # ||cos 5x1||_4 = (3 L^2 / 8)^{1/4}; Lambda^{1/2} multiplies by sqrt 5
        f = cos_mode(grid64, 5, 0)
        l4 = (3 / 8 * (2 * math.pi) ** 2) ** 0.25
        assert norm(f, "lp", p=4) == pytest.approx(l4, rel=1e-12)
        assert x_norm(f, 1.0) == pytest.approx((1 + math.sqrt(5)) * l4 + 1.0, rel=1e-12)

    def test_x_norm_subcritical_exponent(self, grid64):
        # alpha = 1.5: q = 8, Lambda^{1/4}
        f = cos_mode(grid64, 5, 0)
        l4 = (3 / 8 * (2 * math.pi) ** 2) ** 0.25
        # ||cos||_8^8 = L^2 * 35/128
        l8 = ((2 * math.pi) ** 2 * 35 / 128) ** 0.125
        assert x_norm(f, 1.5) == pytest.approx((1 + 5 ** 0.25) * l4 + l8, rel=1e-12)

    def test_x_norm_alpha_range(self, grid16):
        with pytest.raises(ValueError):
            x_norm(SpectralField.zeros(grid16), 2.0)
