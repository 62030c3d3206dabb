import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import brute_force_transport, random_coeffs
from sqgsteady.errors import BlowUpError, StepSizeError
from sqgsteady.evolution import (BetaEquation, FrozenLinear, FullSQG, Perturbation,
                                 SolverParams, evolve, make_integrator, nonlinear_term,
                                 phi_functions, step, viscosity_limit_probe)
from sqgsteady.spectral import (SpectralField, make_grid, norm, riesz_perp)


@pytest.fixture(scope="module")
def g16():
    return make_grid(16)


def test_nonlinear_term_matches_convolution(g16):
    th = SpectralField(random_coeffs(g16, 1), g16)
    vel = SpectralField(random_coeffs(g16, 2), g16)
    u1, u2 = riesz_perp(vel)
    got = nonlinear_term(th, (u1, u2)).coeffs
    want = brute_force_transport(g16, th.coeffs, u1.coeffs, u2.coeffs)
    np.testing.assert_allclose(got, want, atol=1e-13)


@given(seed=st.integers(0, 2 ** 32 - 1))
@settings(max_examples=15)
def test_self_transport_conserves_l2(seed):
    g = make_grid(32)
    th = SpectralField(random_coeffs(g, seed), g)
    # (u.grad theta, theta) = 0 for divergence-free u, after dealiasing too
    N = nonlinear_term(th, riesz_perp(th))
    assert abs(g.area * np.vdot(th.coeffs, N.coeffs).real) < 1e-12 * norm(th, "hs", s=1.0) * norm(th, "l2") ** 2


class TestParams:
    @pytest.mark.parametrize("kw", [{"kappa": 0.0}, {"alpha": 2.0}, {"epsilon": -1.0},
                                    {"dt": 0.0}, {"t_final": -1.0}, {"integrator": "rk4"},
                                    {"output_stride": 0}, {"output_stride": 1.5}])
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            SolverParams(**kw)

    def test_linear_symbol(self, g16):
        L = SolverParams(kappa=2.0, alpha=1.5, epsilon=0.1).linear_symbol(g16)
        k = g16.kmag
        np.testing.assert_allclose(L, -(2.0 * k ** 1.5 + 0.1 * k ** 2))


def test_phi_functions_continuous_at_switch():
    z = np.array([-0.5 + 1e-12, -0.5 - 1e-12, -1e-9, 0.0])
    p1, p2, p3 = phi_functions(z)
    np.testing.assert_allclose(p1[:2], p1[0], rtol=1e-10)
    np.testing.assert_allclose(p2[:2], p2[0], rtol=1e-10)
    np.testing.assert_allclose(p3[:2], p3[0], rtol=1e-9)
    assert p1[3] == 1.0 and p2[3] == 0.5 and p3[3] == pytest.approx(1 / 6)
    zb = np.array([-3.0])
    assert phi_functions(zb)[0][0] == pytest.approx((1 - math.exp(-3)) / 3)


class TestLinearExact:
    @pytest.mark.parametrize("integrator", ["etd_rk2", "imex_cnab2"])
    @pytest.mark.parametrize("alpha", [1.0, 1.5])
    def test_frozen_zero_velocity_decay(self, g16, integrator, alpha):
        c = random_coeffs(g16, 3)
        z = SpectralField.zeros(g16)
        p = SolverParams(alpha=alpha, dt=1e-2, t_final=0.5, integrator=integrator)
        tr = evolve(SpectralField(c, g16), FrozenLinear((z, z)), p)
        want = c * np.exp(-0.5 * g16.power(alpha))
        tol = 1e-13 if integrator == "etd_rk2" else 2e-3
        np.testing.assert_allclose(tr.final.coeffs, want, atol=tol * np.max(np.abs(c)))

    def test_step_integral_exact(self, g16):
        c = random_coeffs(g16, 4)
        z = SpectralField.zeros(g16)
        p = SolverParams(dt=0.1)
        integ = make_integrator(p, g16)
        model = FrozenLinear((z, z)).build(g16, p)
        _, info = integ.step(model, c, 0.0)
        lam = g16.power(1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            want = np.where(lam > 0, (1 - np.exp(-0.1 * lam)) / lam, 0.1) * c
        np.testing.assert_allclose(integ.step_integral(info), want, atol=1e-15)


def test_perturbation_parts_are_exact_difference(g16):
    Theta = SpectralField(random_coeffs(g16, 5), g16)
    w = SpectralField(random_coeffs(g16, 6), g16)
    p = SolverParams()
    ev = Perturbation(Theta).build(g16, p).evaluate(w.coeffs, 0.0)
    full = FullSQG().build(g16, p)
    diff = full.evaluate((Theta + w).coeffs, 0.0).N - full.evaluate(Theta.coeffs, 0.0).N
    np.testing.assert_allclose(ev.N, diff, atol=1e-12)
    np.testing.assert_allclose(ev.parts["transport"] + ev.parts["coupling"], -ev.N, atol=1e-14)


def test_beta_source_is_transport_of_phi(g16):
    f = SpectralField(random_coeffs(g16, 7), g16)
    U = riesz_perp(SpectralField(random_coeffs(g16, 8), g16))
    p = SolverParams()
    model = BetaEquation(U, f).build(g16, p)
    ev = model.evaluate(np.zeros_like(f.coeffs), 0.3)
    phi = SpectralField(f.coeffs * np.exp(0.3 * p.linear_symbol(g16)), g16)
    np.testing.assert_allclose(ev.N, nonlinear_term(phi, U).coeffs, atol=1e-13)


class TestFull:
    def test_energy_balance(self):
        g = make_grid(32)
        x1, x2 = g.coords
        th0 = SpectralField(0.3 * random_coeffs(g, 9, kmax=4), g)
        f = SpectralField(0.2 * random_coeffs(g, 10, kmax=6), g)
        p = SolverParams(dt=2e-3, t_final=1.0, output_stride=50)
        tr = evolve(th0, FullSQG(f), p)
        r0, r1 = tr.records[0], tr.records[-1]
        lhs = 0.5 * (r1["l2"] ** 2 - r0["l2"] ** 2)
        rhs = -p.kappa * r1["diss_cum"] + r1["work_cum"]
        assert lhs == pytest.approx(rhs, rel=1e-5, abs=1e-8)

    def test_integrators_agree(self):
        g = make_grid(32)
        th0 = SpectralField(0.3 * random_coeffs(g, 11, kmax=4), g)
        a = evolve(th0, FullSQG(), SolverParams(dt=1e-3, t_final=0.5), monitors=False).final
        b = evolve(th0, FullSQG(), SolverParams(dt=1e-3, t_final=0.5, integrator="imex_cnab2"),
                   monitors=False).final
        assert norm(a - b, "l2") < 1e-4 * norm(a, "l2")

    def test_second_order(self):
        g = make_grid(32)
        th0 = SpectralField(0.5 * random_coeffs(g, 12, kmax=4), g)
        ref = evolve(th0, FullSQG(), SolverParams(dt=1e-3, t_final=0.4), monitors=False).final
        errs = [norm(evolve(th0, FullSQG(), SolverParams(dt=dt, t_final=0.4),
                            monitors=False).final - ref, "l2") for dt in (2e-2, 1e-2)]
        assert 3.0 < errs[0] / errs[1] < 5.0

    def test_records_and_snapshots(self, g16):
        th0 = SpectralField(random_coeffs(g16, 13), g16)
        tr = evolve(th0, FullSQG(), SolverParams(dt=0.01, t_final=0.1, output_stride=2),
                    snapshot_stride=2)
        assert tr.completed
        np.testing.assert_allclose(tr.times, np.arange(6) * 0.02, atol=1e-15)
        assert sorted(tr.snapshots) == pytest.approx([0.0, 0.04, 0.08])
        assert tr.series("l2").shape == (6,)

    def test_mean_rejected(self, g16):
        c = random_coeffs(g16, 14)
        c[0, 0] = 1.0
        with pytest.raises(ValueError, match="mean-free"):
            evolve(SpectralField(c, g16), FullSQG(), SolverParams(t_final=0.01))

    def test_cfl_violation(self, g16):
        th0 = SpectralField(100 * random_coeffs(g16, 15), g16)
        with pytest.raises(StepSizeError) as exc:
            evolve(th0, FullSQG(), SolverParams(dt=0.1, t_final=1.0))
        assert exc.value.exit_code == 3
        assert exc.value.trajectory.records

    def test_blowup_limit(self, g16):
        th0 = SpectralField(random_coeffs(g16, 16), g16)
        z = SpectralField.zeros(g16)
        # a blow-up factor below 1 trips on the first step
        with pytest.raises(BlowUpError):
            evolve(th0, FrozenLinear((z, z)), SolverParams(t_final=0.1, blowup_factor=1e-3))

    def test_single_step_matches_evolve(self, g16):
        th0 = SpectralField(random_coeffs(g16, 17), g16)
        p = SolverParams(dt=0.01, t_final=0.01)
        a = step(th0, FullSQG(), p)
        b = evolve(th0, FullSQG(), p, monitors=False).final
        np.testing.assert_array_equal(a.coeffs, b.coeffs)


class TestViscosity:
    def test_probe_runs(self, g16):
        th0 = SpectralField(0.2 * random_coeffs(g16, 18), g16)
        pr = viscosity_limit_probe(th0, None, SolverParams(dt=0.01, t_final=0.2),
                                   [1e-1, 1e-2, 1e-3])
        assert len(pr.finals) == 3 and pr.monotone

    @pytest.mark.parametrize("eps", [[1e-2, 1e-1], [-1.0], [1e-2, 1e-2]])
    def test_probe_rejects(self, g16, eps):
        with pytest.raises(ValueError):
            viscosity_limit_probe(SpectralField.zeros(g16), None, SolverParams(), eps)
