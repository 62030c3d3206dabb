"""Steady states by successive approximation.

Each outer step freezes the velocity ``U^i = R-perp Theta^i`` and solves the
linear stationary problem

    U^i . grad Theta^{i+1} + kappa Lambda^alpha Theta^{i+1} = f

by one of two independent routes:

* ``direct`` -- fixed point ``Theta <- kappa^{-1} Lambda^{-alpha}(f - div(U Theta))``;
* ``time_integral`` -- ``Theta = int_0^inf (beta + Phi) dt`` where
  ``Phi(t) = e^{-kappa t Lambda^alpha} f`` and ``beta`` solves the frozen
  transport equation driven by ``-U . grad Phi`` from ``beta(0) = 0``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import evolution as ev
from .errors import (InnerDivergenceError, NonContractionError, NumericalFailure,
                     TailNotConvergedError)
from .spectral import (Grid, SpectralField, as_spectral, check_dissipation, norm,
                       riesz_perp, x_norm)

ROUTES = ("direct", "time_integral")
QUADRATURES = ("etd", "trapezoid")


@dataclass(frozen=True)
class SteadyParams:
    kappa: float = 1.0
    alpha: float = 1.0
    inner_tol: float = 1e-14
    inner_max_iter: int = 500
    outer_tol: float = 1e-12
    outer_max_iter: int = 60
    dt: float = 5e-3
    tail_tol: float = 1e-10  # relative to ||f||_2
    quadrature: str = "etd"
    integrator: str = "etd_rk2"

    def __post_init__(self):
        check_dissipation(self.kappa, self.alpha)
        for name in ("inner_tol", "outer_tol", "dt", "tail_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.quadrature not in QUADRATURES:
            raise ValueError(f"quadrature must be one of {QUADRATURES}")
        if self.quadrature == "etd" and self.integrator != "etd_rk2":
            raise ValueError("etd quadrature needs the etd_rk2 integrator")

    def solver(self, t_final: float = 1.0) -> ev.SolverParams:
        return ev.SolverParams(kappa=self.kappa, alpha=self.alpha, dt=self.dt,
                               t_final=t_final, integrator=self.integrator)


def _vel_physical(grid: Grid, U) -> tuple[np.ndarray, np.ndarray]:
    return grid.ifft(as_spectral(U[0]).coeffs), grid.ifft(as_spectral(U[1]).coeffs)


def _masked(f) -> SpectralField:
    fs = as_spectral(f)
    c = np.where(fs.grid.mask, fs.coeffs, 0)
    c[0, 0] = 0
    return SpectralField(c, fs.grid)


def spectral_support_min(f: SpectralField, rtol: float = 1e-12) -> float:
    """Smallest |k| carrying a coefficient above rtol of the largest one."""
    mags = np.abs(f.coeffs)
    top = mags.max()
    if top == 0:
        return math.inf
    sel = (mags > rtol * top) & (f.grid.kmag > 0)
    return float(f.grid.kmag[sel].min())


# -- linear stationary problem ----------------------------------------------

@dataclass
class LinearSolve:
    theta: SpectralField
    residual: float
    iterations: int
    energy_bound_ok: bool


def linear_residual(theta: SpectralField, U, f: SpectralField, kappa: float,
                    alpha: float) -> float:
    g = theta.grid
    u1, u2 = _vel_physical(g, U)
    D = ev._div_flux(g, u1, u2, g.ifft(theta.coeffs))
    r = D + kappa * g.power(alpha) * theta.coeffs - _masked(f).coeffs
    return norm(SpectralField(r, g), "l2")


def solve_linear_stationary(U, f, params: SteadyParams) -> LinearSolve:
    """Solve U.grad Theta + kappa Lambda^alpha Theta = f for frozen U.

    Raises InnerDivergenceError when the residual grows three times running
    or the iteration budget runs out.
    """
    fs = _masked(f)
    g = fs.grid
    u1, u2 = _vel_physical(g, U)
    inv = g.power(-params.alpha) / params.kappa
    lam = params.kappa * g.power(params.alpha)
    c = np.zeros_like(fs.coeffs)
    prev = math.inf
    growth = 0
    for it in range(1, params.inner_max_iter + 1):
        D = ev._div_flux(g, u1, u2, g.ifft(c)) if it > 1 else 0
        c = inv * (fs.coeffs - D)
        D = ev._div_flux(g, u1, u2, g.ifft(c))
        res = norm(SpectralField(D + lam * c - fs.coeffs, g), "l2")
        if not math.isfinite(res):
            raise InnerDivergenceError("non-finite residual in the linear stationary solve")
        if res < params.inner_tol:
            break
        ratio = res / prev if prev > 0 else math.inf
        growth = growth + 1 if ratio >= 1 else 0
        if growth >= 3:
            raise InnerDivergenceError(
                f"linear stationary solve diverges: residual growth ratio {ratio:.4g} "
                f"at inner iteration {it}; force too large for the frozen velocity")
        prev = res
    else:
        raise InnerDivergenceError(
            f"linear stationary solve not converged after {params.inner_max_iter} "
            f"iterations (residual {res:.3e}, last ratio {res / prev if prev else math.nan:.4g})")
    theta = SpectralField(c, g)
    lhs = norm(theta, "hs", s=params.alpha / 2)
    rhs = norm(fs, "hs", s=-params.alpha / 2) / params.kappa
    return LinearSolve(theta, res, it, lhs <= rhs + params.inner_tol)


# -- time-integral route ----------------------------------------------------

@dataclass
class TimeRouteResult:
    theta: SpectralField
    t_cut: float
    steps: int
    beta_l1: float       # int_0^inf ||beta||_2 dt
    phi_l1: float        # int_0^inf ||Phi||_2 dt
    theta_tilde_l1: float  # int_0^inf ||beta + Phi||_2 dt
    beta_tail_rate: float
    partials: list = field(default_factory=list)  # (t, partial integral, int_0^t ||theta~||)
    beta_norms: list = field(default_factory=list)  # (t, ||beta(t)||_2) per step


def integrate_time_route(U, f, params: SteadyParams, quadrature: str | None = None,
                         record_beta: bool = False) -> TimeRouteResult:
    """Theta = int_0^inf (beta + Phi) dt with tails handled analytically.

    ``quadrature='etd'`` integrates the ETD dense output exactly over each
    step; ``'trapezoid'`` uses the composite trapezoid rule on step values.
    The Phi tail is the per-mode closed form, the beta tail an exponential
    extrapolation from the last unit of time.
    """
    quadrature = quadrature or params.quadrature
    if quadrature not in QUADRATURES:
        raise ValueError(f"quadrature must be one of {QUADRATURES}")
    fs = _masked(f)
    g = fs.grid
    kappa, alpha = params.kappa, params.alpha
    L = -kappa * g.power(alpha)
    negLinv = np.zeros_like(L)
    nz = L != 0
    negLinv[nz] = -1.0 / L[nz]
    f_norm = norm(fs, "l2")
    if f_norm == 0:
        z = SpectralField.zeros(g)
        return TimeRouteResult(z, 0.0, 0, 0.0, 0.0, 0.0, math.inf)
    rho0 = spectral_support_min(fs)
    t_max = 200.0 / (kappa * rho0 ** alpha)
    tol = params.tail_tol * f_norm
    sp = params.solver(t_final=t_max)
    model = ev.BetaEquation(U, fs).build(g, sp)
    integ = ev.make_integrator(replace(sp, integrator="etd_rk2") if quadrature == "etd" else sp, g)
    h = integ.h

    def phi_norm(t):
        return norm(SpectralField(fs.coeffs * np.exp(t * L), g), "l2")

    c = np.zeros_like(fs.coeffs)
    Ib = np.zeros_like(fs.coeffs)
    Iphi_trap = np.zeros_like(fs.coeffs)
    beta_l1 = phi_l1 = tt_l1 = 0.0
    bn_prev, phin_prev, ttn_prev = 0.0, f_norm, f_norm
    history = [(0.0, 0.0)]
    partials = []
    t_check = 1.0 / (kappa * rho0 ** alpha)
    i = 0
    while True:
        t = i * h
        ev0 = model.evaluate(c, t)
        ev._cfl_check(sp, g, h, ev0.umax, t)
        new, info = integ.step(model, c, t, ev0)
        i += 1
        t1 = i * h
        if quadrature == "etd":
            Ib += integ.step_integral(info)
            for w, s, y in info.nodes:
                ph = fs.coeffs * np.exp((t + s) * L)
                beta_l1 += w * norm(SpectralField(y, g), "l2")
                phi_l1 += w * norm(SpectralField(ph, g), "l2")
                tt_l1 += w * norm(SpectralField(y + ph, g), "l2")
        else:
            Ib += 0.5 * h * (c + new)
            Iphi_trap += 0.5 * h * fs.coeffs * (np.exp(t * L) + np.exp(t1 * L))
            bn = norm(SpectralField(new, g), "l2")
            pn = phi_norm(t1)
            tn = norm(SpectralField(new + fs.coeffs * np.exp(t1 * L), g), "l2")
            beta_l1 += 0.5 * h * (bn_prev + bn)
            phi_l1 += 0.5 * h * (phin_prev + pn)
            tt_l1 += 0.5 * h * (ttn_prev + tn)
            bn_prev, phin_prev, ttn_prev = bn, pn, tn
        c = new
        bnorm = norm(SpectralField(c, g), "l2")
        history.append((t1, bnorm))
        if t1 >= t_check - 1e-12 or t1 >= t_max:
            if quadrature == "etd":
                Iphi = fs.coeffs * (1 - np.exp(t1 * L)) * negLinv
            else:
                Iphi = Iphi_trap
            partials.append((t1, SpectralField(Ib + Iphi, g), tt_l1))
            if bnorm + phi_norm(t1) < tol:
                break
            if t1 >= t_max:
                raise TailNotConvergedError(
                    f"tail not converged at T_max={t_max:.4g}: "
                    f"||beta||+||Phi|| = {bnorm + phi_norm(t1):.3e} > {tol:.3e}")
            t_check *= 2
    t_cut = i * h
    # exponential extrapolation of the beta tail from the last unit of time
    window = min(1.0, 0.5 * t_cut)
    j = max(0, len(history) - 1 - int(round(window / h)))
    t_a, b_a = history[j]
    b_b = history[-1][1]
    if b_b > 0 and b_a > b_b:
        rate = math.log(b_a / b_b) / (t_cut - t_a)
        beta_tail = c / rate
        beta_l1 += b_b / rate
        tt_l1 += b_b / rate
    elif b_b == 0:
        rate = math.inf
        beta_tail = np.zeros_like(c)
    else:
        raise TailNotConvergedError(f"beta not decaying at T_cut={t_cut:.4g}")
    phi_l1 += _phi_tail_l1(fs, L, t_cut)
    tt_l1 += _phi_tail_l1(fs, L, t_cut)
    phi_total = fs.coeffs * negLinv if quadrature == "etd" else \
        Iphi_trap + fs.coeffs * np.exp(t_cut * L) * negLinv
    theta = SpectralField(Ib + beta_tail + phi_total, g)
    return TimeRouteResult(theta, t_cut, i, beta_l1, phi_l1, tt_l1, rate, partials,
                           history if record_beta else [])


def _phi_tail_l1(fs: SpectralField, L: np.ndarray, t: float) -> float:
    """int_t^inf ||Phi||_2 bounded by the slowest-shell closed form."""
    Phi = fs.coeffs * np.exp(t * L)
    n0 = norm(SpectralField(Phi, fs.grid), "l2")
    if n0 == 0:
        return 0.0
    rate = float(np.min(-L[(np.abs(Phi) > 0) & (L < 0)]))
    return n0 / rate


# -- nonlinear residual -----------------------------------------------------

def residual(Theta, f, params: SteadyParams) -> float:
    """||div(U Theta) + kappa Lambda^alpha Theta - f||_2 with U = R-perp Theta."""
    th = _masked(Theta)
    return linear_residual(th, riesz_perp(th), f, params.kappa, params.alpha)


# -- outer iteration --------------------------------------------------------

@dataclass
class IterationTrace:
    route: str
    f_x_norm: float
    records: list = field(default_factory=list)
    thetas: list = field(default_factory=list)
    converged: bool = False
    diagnostic: str = ""

    @property
    def ratios(self) -> list:
        return [r["ratio"] for r in self.records if r["ratio"] is not None]

    @property
    def m_observed(self) -> float:
        return max((r["l2"] for r in self.records), default=0.0)

    @property
    def final_residual(self) -> float:
        return self.records[-1]["residual"] if self.records else 0.0


def _norm_record(theta: SpectralField) -> dict:
    return {"l2": norm(theta, "l2"), "h_half": norm(theta, "hs", s=0.5),
            "h1": norm(theta, "hs", s=1.0), "h_3half": norm(theta, "hs", s=1.5)}


def steady_state_iteration(f, params: SteadyParams, theta0=None,
                           route: str = "direct") -> tuple[SpectralField, IterationTrace]:
    """Iterate Theta^{i+1} = route(R-perp Theta^i, f) until the H^{1/2} increment
    drops below ``outer_tol``.

    Raises NonContractionError after three consecutive ratios >= 1.
    """
    if route not in ROUTES:
        raise ValueError(f"route must be one of {ROUTES}")
    fs = _masked(f)
    g = fs.grid
    theta = SpectralField.zeros(g) if theta0 is None else ev._prepare_state(theta0)
    fx = x_norm(fs, params.alpha)
    trace = IterationTrace(route, fx)
    trace.records.append({"i": 0, **_norm_record(theta), "y": None, "ratio": None,
                          "residual": residual(theta, fs, params)})
    trace.thetas.append(theta)
    y_prev = None
    bad = 0
    for i in range(params.outer_max_iter):
        U = riesz_perp(theta)
        extra = {}
        if route == "direct":
            new = solve_linear_stationary(U, fs, params).theta
        else:
            tr = integrate_time_route(U, fs, params)
            new = tr.theta
            extra = {"beta_l1": tr.beta_l1, "phi_l1": tr.phi_l1, "u_l2": norm(U, "l2")}
        y = norm(new - theta, "hs", s=0.5)
        ratio = None if y_prev is None or y_prev == 0 else y / y_prev
        rec = {"i": i + 1, **_norm_record(new), "y": y, "ratio": ratio,
               "residual": residual(new, fs, params), **extra}
        trace.records.append(rec)
        trace.thetas.append(new)
        theta = new
        if y < params.outer_tol or y <= 1e-14 * max(rec["h_half"], 1e-300):
            trace.converged = True
            break
        bad = bad + 1 if ratio is not None and ratio >= 1 else 0
        if bad >= 3:
            trace.diagnostic = (f"non-contraction: ratios >= 1 for 3 iterations with "
                                f"||f||_X = {fx:.4g}; reduce the force")
            err = NonContractionError(trace.diagnostic)
            err.trace = trace
            raise err
        y_prev = y
    else:
        trace.diagnostic = f"outer iteration budget {params.outer_max_iter} exhausted"
    return theta, trace


# -- uniqueness -------------------------------------------------------------

def random_band_field(grid: Grid, seed: int, kmax: float = 6.0) -> SpectralField:
    """Mean-free Gaussian field on 0 < |k| <= kmax, keyed like the forces."""
    from .forcing import random_annulus_coeffs
    return SpectralField(random_annulus_coeffs(grid, grid.k0, kmax, seed), grid)


def admissible_start(grid: Grid, seed: int, f_x: float, kappa: float,
                     m_target: float | None = None) -> SpectralField:
    """Random Theta^0 with ||Lambda^g Theta^0||_2 <= kappa^{-1}||f||_X / 2 for
    g in {1/2, 1, 3/2} (and ||Theta^0||_2 <= M/2 if M is given)."""
    r = random_band_field(grid, seed)
    top = max(norm(r, "hs", s=s) for s in (0.5, 1.0, 1.5))
    scale = 0.5 * f_x / kappa / top
    if m_target is not None:
        scale = min(scale, 0.5 * m_target / norm(r, "l2"))
    return r * scale


@dataclass
class UniquenessReport:
    solutions: list
    labels: list
    pairwise: dict
    max_relative: float
    ok: bool
    failures: list = field(default_factory=list)


def uniqueness_probe(f, params: SteadyParams, initial_seeds=(None, 1, "perturbed"),
                     route: str = "direct", rtol: float = 1e-6) -> UniquenessReport:
    """Run the iteration from several admissible starts and compare the limits.

    Entries of ``initial_seeds``: ``None`` (zero start), an int (random
    admissible start with that seed) or ``"perturbed"`` (the first answer plus
    a small random perturbation).  Disagreement is reported, not raised.
    """
    fs = _masked(f)
    g = fs.grid
    fx = x_norm(fs, params.alpha)
    sols, labels, failures = [], [], []
    for k, seed in enumerate(initial_seeds):
        if seed is None:
            th0 = None
        elif seed == "perturbed":
            if not sols:
                raise ValueError("'perturbed' start needs a previous solution")
            th0 = sols[0] + admissible_start(g, 1000 + k, fx, params.kappa) * 0.2
        else:
            th0 = admissible_start(g, int(seed), fx, params.kappa)
        try:
            th, tr = steady_state_iteration(fs, params, th0, route)
            if not tr.converged:
                failures.append((seed, tr.diagnostic))
        except NumericalFailure as exc:
            failures.append((seed, str(exc)))
            continue
        sols.append(th)
        labels.append("zero" if seed is None else str(seed))
    scale = max([norm(s, "l2") for s in sols] + [norm(fs, "l2")])
    pairwise = {}
    for (a, sa), (b, sb) in itertools.combinations(zip(labels, sols), 2):
        pairwise[(a, b)] = norm(sa - sb, "l2")
    max_rel = max(pairwise.values(), default=0.0) / scale if scale > 0 else 0.0
    ok = not failures and max_rel < rtol
    return UniquenessReport(sols, labels, pairwise, max_rel, ok, failures)


# -- a-priori bound audit ---------------------------------------------------

def gn_ratio(U) -> float:
    """||U||_inf / (||Lambda^{3/2} U||_2^{2/3} ||U||_2^{1/3}); 0 for U = 0."""
    den = norm(U, "hs", s=1.5) ** (2 / 3) * norm(U, "l2") ** (1 / 3)
    return norm(U, "linf") / den if den > 0 else 0.0


@dataclass
class BootstrapAudit:
    c_audit: float
    m_observed: float
    l2_bounded: bool
    non_increasing_after_transient: bool
    gn_constants: list


def bootstrap_norm_audit(trace: IterationTrace, f, params: SteadyParams,
                         transient: int = 2, rtol: float = 1e-9) -> BootstrapAudit:
    """Single constant bounding the H^{1/2}, H^1, H^{3/2} norms of every
    iterate by c * ||f||_X / kappa, plus Gagliardo-Nirenberg ratios of U^i."""
    fx = x_norm(_masked(f), params.alpha)
    top = max((max(r["h_half"], r["h1"], r["h_3half"]) for r in trace.records), default=0.0)
    c_audit = top * params.kappa / fx if fx > 0 else 0.0
    m = trace.m_observed
    l2_ok = all(r["l2"] <= m * (1 + rtol) for r in trace.records)
    mono = True
    for key in ("l2", "h_half", "h1", "h_3half"):
        seq = [r[key] for r in trace.records[transient:]]
        mono &= all(b <= a * (1 + 1e-6) + 1e-300 for a, b in zip(seq, seq[1:]))
    gn = [gn_ratio(riesz_perp(th)) for th in trace.thetas]
    return BootstrapAudit(c_audit, m, l2_ok, mono, gn)


# -- smallness budget -------------------------------------------------------

@dataclass
class SmallnessBudget:
    rho0: float
    kappa: float
    alpha: float
    f_x_norm: float
    m_target: float
    c: float

    @property
    def z_threshold(self) -> float:
        """Positive root Z of c M^2 Z^2 + Z - M = 0 (Z = M when c = 0)."""
        M, c = self.m_target, self.c
        return 2 * M / (1 + math.sqrt(1 + 4 * c * M ** 3))


def calibrate_budget(trace: IterationTrace, f, params: SteadyParams,
                     m_target: float | None = None) -> SmallnessBudget:
    """Fit c in int ||beta^{i+1}|| dt <= c ||U^i||_2^2 ||f||_X^2 from a
    time-integral trace (max over iterates with U^i != 0)."""
    fs = _masked(f)
    fx = x_norm(fs, params.alpha)
    cs = [r["beta_l1"] / (r["u_l2"] ** 2 * fx ** 2) for r in trace.records
          if "beta_l1" in r and r["u_l2"] > 0 and fx > 0]
    c = max(cs, default=0.0)
    M = trace.m_observed if m_target is None else m_target
    return SmallnessBudget(spectral_support_min(fs), params.kappa, params.alpha, fx, M, c)
