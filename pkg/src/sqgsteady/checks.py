"""Property checks behind the ``verify`` scenario.

Each function returns ``CheckReport`` objects; none of them raise on a
failed property.
"""

from __future__ import annotations

import math

import numpy as np

from .forcing import (ForceSpec, annulus_mask, random_annulus_coeffs,
                      semigroup_decay_envelope)
from .reports import CheckReport
from .spectral import (Grid, LambdaPower, Semigroup, SpectralField, apply_multiplier,
                       as_spectral, divergence, forward_transform, make_grid, norm,
                       PhysicalField, riesz_perp)
from .stability import functional_inequality_suite

OPERATOR_TOL = 1e-12
ENVELOPE_TIMES = (0.0, 0.1, 0.5, 1.0)
ENVELOPE_NORMS = ((2, 0.0), (2, 0.5), (4, 0.5), (math.inf, 0.0))


def _rel_err(a: np.ndarray, b: np.ndarray) -> float:
    scale = float(np.max(np.abs(b)))
    return float(np.max(np.abs(a - b))) / scale if scale > 0 else float(np.max(np.abs(a)))


def _single_mode(grid: Grid, m1: int, m2: int):
    x1, x2 = grid.coords
    k1, k2 = m1 * grid.k0, m2 * grid.k0
    phase = k1 * x1 + k2 * x2
    return phase, k1, k2


def operator_exactness(grid: Grid, kappa: float = 1.0, mode=(3, 4)) -> list[CheckReport]:
    """Single-mode closed forms for Lambda^s, R-perp and the semigroup, plus
    the L^2 isometry and divergence of R-perp on a random field."""
    phase, k1, k2 = _single_mode(grid, *mode)
    kk = math.hypot(k1, k2)
    theta = forward_transform(PhysicalField(np.cos(phase), grid))
    reports = []
    for s in (-1.0, 0.5, 1.0, 1.5):
        got = apply_multiplier(theta, LambdaPower(s)).to_physical().values
        err = _rel_err(got, kk ** s * np.cos(phase))
        reports.append(CheckReport(f"operator_lambda_power_s{s:g}", OPERATOR_TOL - err, err,
                                   err <= OPERATOR_TOL))
    u1, u2 = riesz_perp(theta)
    want1, want2 = k2 / kk * np.sin(phase), -k1 / kk * np.sin(phase)
    err = max(_rel_err(u1.to_physical().values, want1), _rel_err(u2.to_physical().values, want2))
    reports.append(CheckReport("operator_riesz_perp", OPERATOR_TOL - err, err, err <= OPERATOR_TOL))
    err = 0.0
    for alpha in (1.0, 1.5):
        for t in (0.0, 0.1, 0.5):
            got = apply_multiplier(theta, Semigroup(t, kappa, alpha)).to_physical().values
            err = max(err, _rel_err(got, math.exp(-kappa * t * kk ** alpha) * np.cos(phase)))
    reports.append(CheckReport("operator_semigroup", OPERATOR_TOL - err, err, err <= OPERATOR_TOL))
    rnd = SpectralField(random_annulus_coeffs(grid, grid.k0, grid.k_max, 3), grid)
    u = riesz_perp(rnd)
    iso = abs(norm(u, "l2") - norm(rnd, "l2")) / norm(rnd, "l2")
    reports.append(CheckReport("operator_riesz_isometry", OPERATOR_TOL - iso, iso,
                               iso <= OPERATOR_TOL))
    div = norm(divergence(u), "l2") / norm(rnd, "hs", s=1.0)
    reports.append(CheckReport("operator_divergence_free", OPERATOR_TOL - div, div,
                               div <= OPERATOR_TOL))
    return reports


def envelope_reports(grid: Grid, seeds=range(50), alphas=(1.0, 1.5), kappa: float = 1.0,
                     rho0: float = 5.0, rho1: float = 10.0, rtol: float = 1e-10
                     ) -> list[CheckReport]:
    """Semigroup decay envelope over seeded annulus forces, one report per
    (p, nu), plus the single-shell equality case at p = 2."""
    forces = [SpectralField(random_annulus_coeffs(grid, rho0, rho1, int(s)), grid)
              for s in seeds]
    reports = []
    for p, nu in ENVELOPE_NORMS:
        worst = 0.0
        rows = []
        for alpha in alphas:
            for f in forces:
                env = semigroup_decay_envelope(f, kappa, alpha, rho0, nu, p, ENVELOPE_TIMES)
                worst = max(worst, env.max_ratio)
                rows.extend((t, v, b) for t, v, b in zip(env.times, env.values, env.bounds))
        tag = "inf" if math.isinf(p) else f"{p:g}"
        reports.append(CheckReport(f"envelope_p{tag}_nu{nu:g}", 1 + rtol - worst, worst,
                                   worst <= 1 + rtol, details={"forces": len(forces)},
                                   rows=rows))
    # single shell |k| = rho0: the envelope is attained
    shell = SpectralField(random_annulus_coeffs(grid, rho0, rho0, 0), grid)
    dev = 0.0
    for alpha in alphas:
        for nu in (0.0, 0.5):
            env = semigroup_decay_envelope(shell, kappa, alpha, rho0, nu, 2, ENVELOPE_TIMES)
            dev = max(dev, float(np.max(np.abs(env.ratios - 1))))
    reports.append(CheckReport("envelope_single_shell_equality", rtol - dev, dev, dev <= rtol))
    return reports


def functional_reports(grid: Grid, compare: Grid | None = None, seeds=range(100),
                       stable_rtol: float = 0.10) -> list[CheckReport]:
    """Functional-inequality constants; with ``compare``, also their relative
    change between the two grids."""
    a = functional_inequality_suite(grid, seeds)
    b = functional_inequality_suite(compare, seeds) if compare is not None else None
    reports = []
    dev = max(abs(a["riesz_p2_nu0"] - 1), abs(a["riesz_p2_nu0_min"] - 1),
              abs(a["riesz_p2_nu0.5"] - 1), abs(a["riesz_p2_nu0.5_min"] - 1))
    reports.append(CheckReport("fi_riesz_p2", 1e-12 - dev, a["riesz_p2_nu0"], dev <= 1e-12))
    for key in ("sobolev", "gn", "riesz_p4_nu0", "riesz_p4_nu0.5"):
        c = a[key]
        ok = math.isfinite(c) and c > 0
        details = {"count": a["count"]}
        slack = 0.0
        if b is not None:
            rel = abs(b[key] - c) / c
            details.update(compare_n=compare.n, compare_value=b[key], relative_change=rel)
            slack = stable_rtol - rel
            ok = ok and rel <= stable_rtol
        reports.append(CheckReport(f"fi_{key}", slack, c, ok, details=details))
    return reports


def verify_all(grid: Grid, kappa: float = 1.0, suite_seeds: int = 100,
               envelope_seeds: int = 50, rho0: float = 5.0, rho1: float = 10.0,
               compare_n: int | None = 128) -> list[CheckReport]:
    compare = None
    if compare_n and compare_n != grid.n:
        compare = make_grid(compare_n, grid.box_length, grid.dealias_fraction)
    reports = operator_exactness(grid, kappa)
    reports += envelope_reports(grid, range(envelope_seeds), kappa=kappa, rho0=rho0, rho1=rho1)
    reports += functional_reports(grid, compare, range(suite_seeds))
    return reports
