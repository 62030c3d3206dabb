"""Pseudo-spectral time integration of the forced SQG family.

Every variant has the form ``d/dt c = L c + N(c, t)`` with the diagonal
linear part ``L(k) = -(kappa |k|^alpha + epsilon |k|^2)`` and a dealiased
transport term ``N``.  Two integrators are available:

* ``etd_rk2`` -- Cox-Matthews ETD2RK.  The linear part is exact, and each
  step carries a dense output (the exact solution of the linear ODE driven by
  the straight-line interpolant of ``N``) used for accurate time integrals.
* ``imex_cnab2`` -- Crank-Nicolson for ``L``, second-order Adams-Bashforth
  for ``N``.

States are projected onto the dealiased lattice on entry and stay there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import BlowUpError, StepSizeError
from .spectral import (Grid, SpectralField, as_spectral, check_dissipation,
                       low_high_split, norm)

INTEGRATORS = ("etd_rk2", "imex_cnab2")


@dataclass(frozen=True)
class SolverParams:
    kappa: float = 1.0
    alpha: float = 1.0
    epsilon: float = 0.0
    dt: float = 1e-3
    t_final: float = 1.0
    integrator: str = "etd_rk2"
    output_stride: int = 1
    cfl_limit: float = 0.5
    blowup_factor: float = 1e6

    def __post_init__(self):
        check_dissipation(self.kappa, self.alpha)
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.t_final > 0:
            raise ValueError(f"t_final must be positive, got {self.t_final}")
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"integrator must be one of {INTEGRATORS}, got {self.integrator!r}")
        if int(self.output_stride) != self.output_stride or self.output_stride < 1:
            raise ValueError(f"output_stride must be a positive integer, got {self.output_stride}")

    def linear_symbol(self, grid: Grid) -> np.ndarray:
        return -(self.kappa * grid.power(self.alpha) + self.epsilon * grid.kmag ** 2)

    def replace(self, **kw) -> SolverParams:
        from dataclasses import replace
        return replace(self, **kw)


# -- transport ---------------------------------------------------------------

def _div_flux(grid: Grid, u1: np.ndarray, u2: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Dealiased spectral divergence of (u1 s, u2 s); inputs are physical."""
    f1 = grid.fft(u1 * s)
    f2 = grid.fft(u2 * s)
    return np.where(grid.mask, 1j * (grid.dk1 * f1 + grid.dk2 * f2), 0)


def _velocity(grid: Grid, c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Physical R-perp velocity of the spectral scalar c."""
    a = c * grid.power(-1.0)
    return grid.ifft(-1j * grid.dk2 * a), grid.ifft(1j * grid.dk1 * a)


def nonlinear_term(theta: SpectralField, advecting_u) -> SpectralField:
    """-dealias(div(u theta)), computed pseudo-spectrally."""
    g = theta.grid
    u1 = as_spectral(advecting_u[0])
    u2 = as_spectral(advecting_u[1])
    out = -_div_flux(g, g.ifft(u1.coeffs), g.ifft(u2.coeffs), g.ifft(theta.coeffs))
    if not np.all(np.isfinite(out)):
        raise BlowUpError("non-finite values in the transport term")
    return SpectralField(out, g)


# -- equation variants -------------------------------------------------------

@dataclass
class Eval:
    """Transport evaluation: total N, optional named parts, diagnostics."""
    N: np.ndarray
    umax: float
    smax: float
    parts: dict = field(default_factory=dict)


class _Model:
    grid: Grid
    force_hat: np.ndarray | None = None

    def evaluate(self, c: np.ndarray, t: float) -> Eval:  # pragma: no cover
        raise NotImplementedError


@dataclass(frozen=True)
class FullSQG:
    """theta_t + u.grad theta + kappa Lambda^alpha theta - eps Lap theta = f, u = R-perp theta."""
    force: object = None

    def build(self, grid: Grid, params: SolverParams) -> _Model:
        return _FullModel(grid, None if self.force is None else as_spectral(self.force).coeffs)


class _FullModel(_Model):
    def __init__(self, grid, force_hat):
        self.grid = grid
        self.force_hat = None if force_hat is None else np.where(grid.mask, force_hat, 0)

    def evaluate(self, c, t):
        g = self.grid
        u1, u2 = _velocity(g, c)
        th = g.ifft(c)
        N = -_div_flux(g, u1, u2, th)
        if self.force_hat is not None:
            N = N + self.force_hat
        return Eval(N, float(np.sqrt(np.max(u1 ** 2 + u2 ** 2))), float(np.max(np.abs(th))))


@dataclass(frozen=True)
class FrozenLinear:
    """Transport by a fixed divergence-free velocity U, no force."""
    U: tuple

    def build(self, grid: Grid, params: SolverParams) -> _Model:
        return _FrozenModel(grid, self.U, None)


@dataclass(frozen=True)
class BetaEquation:
    """beta_t + U.grad beta + kappa Lambda^alpha beta = -U.grad Phi(t), Phi(t) = e^{tL} f.

    Phi is evaluated exactly at each stage time rather than co-integrated.
    """
    U: tuple
    force: object

    def build(self, grid: Grid, params: SolverParams) -> _Model:
        return _FrozenModel(grid, self.U, (as_spectral(self.force).coeffs,
                                           params.linear_symbol(grid)))


class _FrozenModel(_Model):
    def __init__(self, grid, U, source):
        self.grid = grid
        self.u1 = grid.ifft(as_spectral(U[0]).coeffs)
        self.u2 = grid.ifft(as_spectral(U[1]).coeffs)
        self.umax = float(np.sqrt(np.max(self.u1 ** 2 + self.u2 ** 2)))
        self.source = source

    def phi(self, t: float) -> np.ndarray:
        f_hat, L = self.source
        return f_hat * np.exp(t * L)

    def evaluate(self, c, t):
        g = self.grid
        s = c if self.source is None else c + self.phi(t)
        sp = g.ifft(s)
        N = -_div_flux(g, self.u1, self.u2, sp)
        return Eval(N, self.umax, float(np.max(np.abs(sp))))


@dataclass(frozen=True)
class Perturbation:
    """w_t + R-perp(Theta+w).grad w + kappa Lambda^alpha w + R-perp w.grad Theta = 0.

    Parts: ``transport`` = R-perp theta . grad w, ``coupling`` = R-perp w . grad Theta
    (both as they appear on the left-hand side).
    """
    Theta: object

    def build(self, grid: Grid, params: SolverParams) -> _Model:
        return _PerturbationModel(grid, as_spectral(self.Theta).coeffs)


class _PerturbationModel(_Model):
    def __init__(self, grid, Theta_hat):
        self.grid = grid
        self.Theta_hat = Theta_hat
        self.Theta = grid.ifft(Theta_hat)
        self.U1, self.U2 = _velocity(grid, Theta_hat)

    def evaluate(self, c, t):
        g = self.grid
        w = g.ifft(c)
        v1, v2 = _velocity(g, c)
        a1, a2 = self.U1 + v1, self.U2 + v2
        transport = _div_flux(g, a1, a2, w)
        coupling = _div_flux(g, v1, v2, self.Theta)
        return Eval(-(transport + coupling), float(np.sqrt(np.max(a1 ** 2 + a2 ** 2))),
                    float(np.max(np.abs(w))),
                    {"transport": transport, "coupling": coupling})


# -- phi functions and integrators ------------------------------------------

def phi_functions(z: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """phi_1, phi_2, phi_3 of exponential integrators for real z <= 0."""
    z = np.asarray(z, dtype=float)
    p1 = np.empty_like(z)
    p2 = np.empty_like(z)
    p3 = np.empty_like(z)
    small = np.abs(z) < 0.5
    if small.any():
        zs = z[small]
        terms = [zs ** j for j in range(22)]
        p1[small] = sum(t / math.factorial(j + 1) for j, t in enumerate(terms))
        p2[small] = sum(t / math.factorial(j + 2) for j, t in enumerate(terms))
        p3[small] = sum(t / math.factorial(j + 3) for j, t in enumerate(terms))
    big = ~small
    if big.any():
        zb = z[big]
        a = np.expm1(zb) / zb
        b = (a - 1.0) / zb
        p1[big] = a
        p2[big] = b
        p3[big] = (b - 0.5) / zb
    return p1, p2, p3


_GL_X, _GL_W = np.polynomial.legendre.leggauss(3)


@dataclass
class StepInfo:
    """Everything about one completed step; dense values at Gauss nodes."""
    t0: float
    h: float
    u0: np.ndarray
    u1: np.ndarray
    ev0: Eval
    evA: Eval | None
    nodes: list  # (weight, sigma, state) triples
    _integ: object = None

    def interpolated_part(self, name: str) -> list:
        """Straight-line interpolant of a transport part at the quadrature nodes."""
        if self.evA is None:
            raise ValueError("transport parts at quadrature nodes need etd_rk2")
        p0 = self.ev0.parts[name]
        pa = self.evA.parts[name]
        return [p0 + (s / self.h) * (pa - p0) for _, s, _ in self.nodes]


class ETDRK2:
    name = "etd_rk2"

    def __init__(self, L: np.ndarray, h: float):
        self.h = h
        self.E = np.exp(h * L)
        p1, p2, p3 = phi_functions(h * L)
        self.P1 = h * p1
        self.P2 = h * p2
        # integral of the dense output over one step
        self.Q1 = h * p1
        self.Q2 = h * h * p2
        self.Q3 = h * h * p3
        self.node_data = []
        for x, w in zip(_GL_X, _GL_W):
            s = 0.5 * h * (x + 1)
            q1, q2, _ = phi_functions(s * L)
            self.node_data.append((0.5 * h * w, s, np.exp(s * L), s * q1, (s * s / h) * q2))

    def step(self, model: _Model, c: np.ndarray, t: float, ev0: Eval | None = None):
        ev0 = ev0 or model.evaluate(c, t)
        a = self.E * c + self.P1 * ev0.N
        evA = model.evaluate(a, t + self.h)
        D = evA.N - ev0.N
        new = a + self.P2 * D
        nodes = [(w, s, E * c + A * ev0.N + B * D) for w, s, E, A, B in self.node_data]
        return new, StepInfo(t, self.h, c, new, ev0, evA, nodes, self)

    def step_integral(self, info: StepInfo) -> np.ndarray:
        """Exact integral of the dense output over the step."""
        return self.Q1 * info.u0 + self.Q2 * info.ev0.N + self.Q3 * (info.evA.N - info.ev0.N)


class IMEXCNAB2:
    name = "imex_cnab2"

    def __init__(self, L: np.ndarray, h: float):
        self.h = h
        self.lhs = 1.0 / (1.0 - 0.5 * h * L)
        self.rhs = 1.0 + 0.5 * h * L
        self.prev = None

    def step(self, model: _Model, c: np.ndarray, t: float, ev0: Eval | None = None):
        ev0 = ev0 or model.evaluate(c, t)
        Nprev = ev0.N if self.prev is None else self.prev
        new = self.lhs * (self.rhs * c + self.h * (1.5 * ev0.N - 0.5 * Nprev))
        self.prev = ev0.N
        h = self.h
        nodes = [(0.5 * h, 0.0, c), (0.5 * h, h, new)]
        return new, StepInfo(t, h, c, new, ev0, None, nodes, self)

    def step_integral(self, info: StepInfo) -> np.ndarray:
        return 0.5 * self.h * (info.u0 + info.u1)


def make_integrator(params: SolverParams, grid: Grid, h: float | None = None):
    L = params.linear_symbol(grid)
    h = params.dt if h is None else h
    return ETDRK2(L, h) if params.integrator == "etd_rk2" else IMEXCNAB2(L, h)


def _prepare_state(f) -> SpectralField:
    fs = as_spectral(f)
    g = fs.grid
    if abs(fs.coeffs[0, 0]) > 1e-12 * float(np.max(np.abs(fs.coeffs))):
        raise ValueError(f"initial field must be mean-free, mean coefficient {fs.coeffs[0, 0]}")
    c = np.where(g.mask, fs.coeffs, 0)
    c[0, 0] = 0
    return SpectralField(c, g)


def _cfl_check(params: SolverParams, grid: Grid, h: float, umax: float, t: float):
    if h * umax * grid.k_max > params.cfl_limit:
        raise StepSizeError(
            f"CFL violation at t={t:.6g}: dt*max|u|*k_max = {h * umax * grid.k_max:.3g} "
            f"> {params.cfl_limit}")


def step(state, variant, params: SolverParams, t: float = 0.0) -> SpectralField:
    """Advance one step of size params.dt from a fresh integrator."""
    s = _prepare_state(state)
    g = s.grid
    model = variant.build(g, params)
    integ = make_integrator(params, g)
    ev0 = model.evaluate(s.coeffs, t)
    _cfl_check(params, g, integ.h, ev0.umax, t)
    new, _ = integ.step(model, s.coeffs, t, ev0)
    if not np.all(np.isfinite(new)):
        raise BlowUpError(f"non-finite state after step at t={t + integ.h:.6g}")
    return SpectralField(new, g)


# -- trajectories ------------------------------------------------------------

MONITOR_KEYS = ("t", "l2", "hs", "linf", "low_l2", "high_l2", "diss_cum")


@dataclass
class Trajectory:
    times: list = field(default_factory=list)
    records: list = field(default_factory=list)
    snapshots: dict = field(default_factory=dict)
    final: SpectralField | None = None
    completed: bool = False
    diagnostic: str = ""

    def series(self, key: str) -> np.ndarray:
        return np.array([r[key] for r in self.records])

    def snapshot_list(self) -> list:
        return [(t, self.snapshots[t]) for t in sorted(self.snapshots)]


def _monitor_record(grid: Grid, c: np.ndarray, t: float, alpha: float, diss: float,
                    extra: dict) -> dict:
    s = SpectralField(c, grid)
    low, high = low_high_split(s)
    rec = {
        "t": float(t),
        "l2": norm(s, "l2"),
        "hs": norm(s, "hs", s=alpha / 2),
        "linf": float(np.max(np.abs(grid.ifft(c)))),
        "low_l2": norm(low, "l2"),
        "high_l2": norm(high, "l2"),
        "diss_cum": float(diss),
    }
    rec.update(extra)
    return rec


def evolve(initial, variant, params: SolverParams, monitors: bool = True,
           snapshot_stride: int | None = None,
           observers: Sequence[Callable] = (),
           sample_hooks: Sequence[Callable] = ()) -> Trajectory:
    """Integrate ``variant`` from ``initial`` to ``params.t_final``.

    Monitors are recorded every ``output_stride`` steps (and at t=0).  The
    cumulative dissipation ``diss_cum`` integrates ||Lambda^{alpha/2} theta||_2^2;
    for the full equation ``work_cum`` integrates (f, theta).  ``observers``
    are called as ``obs(info)`` after each step; ``sample_hooks`` as
    ``hook(t, coeffs) -> dict`` at each sample and their output is merged
    into the record.  Spectral snapshots are kept every ``snapshot_stride``
    samples.  On a step error the exception carries the partial trajectory
    as ``exc.trajectory``.
    """
    s = _prepare_state(initial)
    g = s.grid
    model = variant.build(g, params)
    nsteps = max(1, int(math.ceil(params.t_final / params.dt - 1e-9)))
    h = params.t_final / nsteps
    integ = make_integrator(params, g, h)
    dsym = g.area * g.power(params.alpha)
    force_hat = getattr(model, "force_hat", None)

    c = s.coeffs
    traj = Trajectory()
    diss = 0.0
    work = 0.0
    init_max = float(np.max(np.abs(g.ifft(c))))
    ref = max(init_max, 0.0 if force_hat is None else
              float(np.max(np.abs(g.ifft(force_hat)))) / params.kappa)
    limit = params.blowup_factor * ref if ref > 0 else math.inf

    def sample(i, c):
        t = i * h
        extra = {}
        if force_hat is not None:
            extra["work_cum"] = float(work)
        for hook in sample_hooks:
            extra.update(hook(t, c))
        if monitors:
            traj.records.append(_monitor_record(g, c, t, params.alpha, diss, extra))
        else:
            traj.records.append({"t": float(t), **extra})
        traj.times.append(float(t))
        if snapshot_stride and (len(traj.times) - 1) % snapshot_stride == 0:
            traj.snapshots[float(t)] = SpectralField(c.copy(), g)

    sample(0, c)
    ev0 = None
    try:
        for i in range(nsteps):
            t = i * h
            ev0 = model.evaluate(c, t)
            if not math.isfinite(ev0.smax) or ev0.smax > limit:
                raise BlowUpError(
                    f"sup norm {ev0.smax:.3g} exceeds blow-up limit {limit:.3g} at t={t:.6g}")
            _cfl_check(params, g, h, ev0.umax, t)
            new, info = integ.step(model, c, t, ev0)
            if not np.all(np.isfinite(new)):
                raise BlowUpError(f"non-finite state at t={t + h:.6g}")
            if monitors:
                for w, _, y in info.nodes:
                    diss += w * float(np.sum(dsym * np.abs(y) ** 2))
                    if force_hat is not None:
                        work += w * g.area * float(np.real(np.vdot(force_hat, y)))
            for obs in observers:
                obs(info)
            c = new
            if (i + 1) % params.output_stride == 0 or i + 1 == nsteps:
                sample(i + 1, c)
    except (StepSizeError, BlowUpError) as exc:
        traj.final = SpectralField(c, g)
        traj.diagnostic = str(exc)
        exc.trajectory = traj
        raise
    traj.final = SpectralField(c, g)
    traj.completed = True
    return traj


@dataclass
class ViscosityProbe:
    epsilons: list
    finals: list
    differences: list  # ||theta_{eps_i}(T) - theta_{eps_{i+1}}(T)||_2

    @property
    def monotone(self) -> bool:
        d = self.differences
        return all(b <= a for a, b in zip(d, d[1:]))


def viscosity_limit_probe(initial, f, params: SolverParams, epsilons) -> ViscosityProbe:
    """Run the regularized full equation for each epsilon and compare endpoints."""
    epsilons = [float(e) for e in epsilons]
    if any(e < 0 for e in epsilons):
        raise ValueError("epsilons must be >= 0")
    if any(b >= a for a, b in zip(epsilons, epsilons[1:])):
        raise ValueError("epsilons must be strictly decreasing")
    finals = []
    for eps in epsilons:
        tr = evolve(initial, FullSQG(f), params.replace(epsilon=eps), monitors=False)
        finals.append(tr.final)
    diffs = [norm(a - b, "l2") for a, b in zip(finals, finals[1:])]
    return ViscosityProbe(epsilons, finals, diffs)
