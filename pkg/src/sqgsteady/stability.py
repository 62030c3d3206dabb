"""Perturbations of a steady state and the inequalities that control them.

``w = theta - Theta`` solves

    w_t + R-perp theta . grad w + kappa Lambda^alpha w + R-perp w . grad Theta = 0.

The perturbation run carries observers that integrate, on each step's dense
output, the time integrals appearing in the generalized energy
inequalities, so the checks afterwards are pure post-processing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import evolution as ev
from .forcing import random_annulus_coeffs
from .reports import CheckReport
from .spectral import (Grid, HighWeight, LowWeight, SpectralField, as_spectral,
                       check_dissipation, norm, riesz_perp)

_SLACK_TOL = 1e-8


@dataclass(frozen=True)
class SplittingParams:
    l_exponent: float = 6.0
    gamma: float = 6.0
    kappa: float = 1.0

    def __post_init__(self):
        if not self.l_exponent > 5:
            raise ValueError(f"l_exponent must exceed 5, got {self.l_exponent}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")

    def r(self, t):
        """Splitting radius for the beta decay argument."""
        return self.l_exponent / (self.kappa * (1 + np.asarray(t, dtype=float)))

    def rho(self, t):
        """Ball radius for the high-frequency estimate."""
        return self.gamma / (2 * self.kappa * (1 + np.asarray(t, dtype=float)))

    def E(self, t):
        return (1 + np.asarray(t, dtype=float)) ** self.gamma

    def dE(self, t):
        return self.gamma * (1 + np.asarray(t, dtype=float)) ** (self.gamma - 1)

    def balance(self, t):
        """E'(t) - 2 kappa E(t) rho(t); zero by construction."""
        return self.dE(t) - 2 * self.kappa * self.E(t) * self.rho(t)


# -- decay fits --------------------------------------------------------------

@dataclass
class DecayFit:
    model: str
    amplitude: float
    exponent: float  # p for algebraic, lambda for exponential
    window: tuple
    r_squared: float
    residual_sup: float


def fit_decay(series, model: str = "exponential", window=None) -> DecayFit:
    """Least squares on log(value) against t (exponential) or log(1+t) (algebraic)."""
    if model not in ("exponential", "algebraic"):
        raise ValueError(f"model must be 'exponential' or 'algebraic', got {model!r}")
    data = np.asarray(list(series), dtype=float)
    if data.ndim != 2 or data.shape[1] != 2:
        raise ValueError("series must be a list of (t, value) pairs")
    t, v = data[:, 0], data[:, 1]
    lo, hi = (t.min(), t.max()) if window is None else window
    sel = (t >= lo) & (t <= hi)
    if not sel.any():
        raise ValueError(f"window [{lo}, {hi}] contains no samples")
    if sel.sum() < 10:
        raise ValueError(f"need at least 10 samples in the window, got {int(sel.sum())}")
    t, v = t[sel], v[sel]
    if np.any(v <= 0):
        raise ValueError("values in the fit window must be positive")
    x = t if model == "exponential" else np.log1p(t)
    y = np.log(v)
    slope, icpt = np.polyfit(x, y, 1)
    res = y - (slope * x + icpt)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(res ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return DecayFit(model, float(math.exp(icpt)), float(-slope), (float(t[0]), float(t[-1])),
                    min(1.0, max(0.0, r2)), float(np.max(np.abs(res))))


# -- perturbation run --------------------------------------------------------

def _ip(g: Grid, a: np.ndarray, b: np.ndarray) -> float:
    return float(g.area * np.real(np.vdot(b, a)))


def _sq(g: Grid, a: np.ndarray) -> float:
    return float(g.area * np.sum(np.abs(a) ** 2))


class _GenTracker:
    """Step observer integrating the generalized-energy time integrals.

    Cumulative integrals (from 0) of the high-part terms and, for each start
    time s, the two low-part cross integrals against the retarded weight.
    """

    def __init__(self, grid: Grid, params: ev.SolverParams, split: SplittingParams,
                 starts_idx: dict, h: float):
        g = grid
        self.g = g
        self.kappa = params.kappa
        self.split = split
        self.h = h
        self.K = g.power(params.alpha)
        self.phi2 = LowWeight().symbol(g) ** 2
        psi = HighWeight().symbol(g)
        self.psi2 = psi ** 2
        self.one_m_psi2 = 1 - self.psi2
        self.cum = dict(A=0.0, B=0.0, Cabs=0.0, Tabs=0.0, Csig=0.0, Tpsi=0.0)
        self.starts_idx = dict(starts_idx)  # step index -> s
        self.low = {}  # s -> dict(w_s, run, IT, IC)
        self.enabled = params.integrator == "etd_rk2"
        self.node_decay = None

    def __call__(self, info: ev.StepInfo):
        if not self.enabled:
            return
        g = self.g
        i0 = int(round(info.t0 / self.h))
        if i0 in self.starts_idx:
            s = self.starts_idx[i0]
            self.low[s] = {"w_s": info.u0.copy(), "run": self.phi2 * info.u0,
                           "IT": 0.0, "IC": 0.0}
        if self.node_decay is None:
            self.node_decay = [np.exp(-2 * self.kappa * sig * self.K) for _, sig, _ in info.nodes]
            self.step_decay = np.exp(-2 * self.kappa * info.h * self.K)
        have_parts = bool(info.ev0.parts)
        if have_parts:
            Ts = info.interpolated_part("transport")
            Cs = info.interpolated_part("coupling")
        for j, (w, sig, y) in enumerate(info.nodes):
            tau = info.t0 + sig
            E = float(self.split.E(tau))
            dE = float(self.split.dE(tau))
            py = self.psi2 * y
            c = self.cum
            c["A"] += w * E * float(g.area * np.sum(self.K * self.psi2 * np.abs(y) ** 2))
            c["B"] += w * dE * float(g.area * np.sum(self.psi2 * np.abs(y) ** 2))
            if not have_parts:
                continue
            T, C = Ts[j], Cs[j]
            cc = _ip(g, C, py)
            tt = _ip(g, T, self.one_m_psi2 * y)
            c["Cabs"] += w * E * abs(cc)
            c["Tabs"] += w * E * abs(tt)
            c["Csig"] += w * E * cc
            c["Tpsi"] += w * E * _ip(g, T, py)
            for rec in self.low.values():
                weight = rec["run"] * self.node_decay[j]
                rec["IT"] += w * abs(_ip(g, T, weight))
                rec["IC"] += w * abs(_ip(g, C, weight))
        for rec in self.low.values():
            rec["run"] = rec["run"] * self.step_decay

    def sample(self, t: float, coeffs: np.ndarray) -> dict:
        out = {f"gen_{k}": v for k, v in self.cum.items()}
        for s, rec in self.low.items():
            out[f"gen1_IT@{s!r}"] = rec["IT"]
            out[f"gen1_IC@{s!r}"] = rec["IC"]
        return out


@dataclass
class StabilityRun:
    trajectory: ev.Trajectory
    Theta: SpectralField
    w0_l2: float
    params: ev.SolverParams
    split: SplittingParams
    pairs: list
    low_states: dict          # s -> w(s) coefficients
    grad_theta: float
    theta_sup: float
    cross_check_error: float | None = None
    gen_available: bool = True
    full_trajectory: ev.Trajectory | None = None

    def series(self, key: str) -> np.ndarray:
        return self.trajectory.series(key)


def default_pairs(t_final: float, spacing: float | None = None) -> list:
    """20 (s, t) pairs: s in {0,1,2,5,10} times offsets {0.5,2,10,40}, scaled to
    t_final/50 and rounded to multiples of ``spacing``."""
    scale = t_final / 50.0

    def rnd(x):
        return x if spacing is None else round(x / spacing) * spacing

    pairs = []
    for s in (0, 1, 2, 5, 10):
        for d in (0.5, 2, 10, 40):
            pairs.append((rnd(s * scale), rnd(min((s + d) * scale, t_final))))
    return pairs


def random_perturbation(grid: Grid, seed: int, l2: float, kmax: float = 6.0) -> SpectralField:
    """Mean-free Gaussian field on 0 < |k| <= kmax rescaled to the given L^2 norm."""
    w = SpectralField(random_annulus_coeffs(grid, grid.k0, kmax, seed), grid)
    return w * (l2 / norm(w, "l2"))


def run_stability(Theta, w0, params: ev.SolverParams, force=None,
                  split: SplittingParams | None = None, pairs=None,
                  cross_check: bool = True, snapshot_stride: int = 10,
                  variant=None) -> StabilityRun:
    """Evolve the perturbation equation from w0 about Theta.

    Samples carry ||w||_2, ||Lambda^{1/2} w||_2, the phi/psi split norms,
    ||theta||_inf and the generalized-energy accumulators.  With
    ``cross_check`` the full equation is also run from Theta + w0 (driven by
    ``force``) and the largest sampled ||w - (theta - Theta)||_2 is recorded.
    ``variant`` replaces the perturbation equation (e.g. a frozen linear
    model); the cross-check is skipped then.
    """
    Th = ev._prepare_state(Theta)
    w0s = ev._prepare_state(w0)
    g = Th.grid
    split = split or SplittingParams(kappa=params.kappa)
    nsteps = max(1, int(math.ceil(params.t_final / params.dt - 1e-9)))
    h = params.t_final / nsteps
    sample_every = params.output_stride * h
    pairs = default_pairs(params.t_final, sample_every) if pairs is None else \
        [tuple(p) for p in pairs]

    def snap(t, what):
        k = t / sample_every
        if abs(k - round(k)) > 1e-6 or t < 0 or t > params.t_final + 1e-9:
            raise ValueError(f"{what} time {t} is not a sample time (spacing {sample_every:.6g})")
        return round(k) * sample_every

    pairs = [(snap(s, "pair start"), snap(t, "pair end")) for s, t in pairs]
    if any(t < s for s, t in pairs):
        raise ValueError("pairs need s <= t")
    starts = sorted({s for s, _ in pairs})
    starts_idx = {int(round(s / h)): s for s in starts}
    tracker = _GenTracker(g, params, split, starts_idx, h)
    Theta_phys = g.ifft(Th.coeffs)
    low_states = {}

    def hook(t, c):
        i = int(round(t / h))
        if i in starts_idx:
            low_states[starts_idx[i]] = c.copy()
        s = SpectralField(c, g)
        return {"h_half": norm(s, "hs", s=0.5),
                "theta_linf": float(np.max(np.abs(Theta_phys + g.ifft(c)))),
                **tracker.sample(t, c)}

    traj = ev.evolve(w0s, variant or ev.Perturbation(Th), params, snapshot_stride=snapshot_stride,
                     observers=[tracker], sample_hooks=[hook])
    run = StabilityRun(traj, Th, norm(w0s, "l2"), params, split, pairs, low_states,
                       norm(Th, "hs", s=1.0), float(np.max(np.abs(Theta_phys))),
                       gen_available=tracker.enabled)
    if cross_check and variant is None:
        full = ev.evolve(Th + w0s, ev.FullSQG(force), params, monitors=False,
                         snapshot_stride=snapshot_stride)
        err = 0.0
        for t, snap_w in traj.snapshot_list():
            other = full.snapshots.get(t)
            if other is not None:
                err = max(err, norm(snap_w - (other - Th), "l2"))
        run.cross_check_error = err
        run.full_trajectory = full
    return run


def control_run(Theta, force, params: ev.SolverParams) -> CheckReport:
    """Full equation from theta0 = Theta; sup_t ||theta(t) - Theta||_2."""
    Th = ev._prepare_state(Theta)
    g = Th.grid
    rows = []

    def hook(t, c):
        d = norm(SpectralField(c - Th.coeffs, g), "l2")
        rows.append((t, d, 1e-9))
        return {"w_l2": d}

    ev.evolve(Th, ev.FullSQG(force), params, monitors=False, sample_hooks=[hook])
    top = max(r[1] for r in rows)
    return CheckReport("control_fixed_point", 1e-9 - top, top, top <= 1e-9, rows=rows)


# -- checks ------------------------------------------------------------------

def _record_at(run: StabilityRun, t: float) -> dict:
    recs = run.trajectory.records
    i = int(np.argmin([abs(r["t"] - t) for r in recs]))
    return recs[i]


def energy_inequality_check(run: StabilityRun, tol: float = 1e-6) -> CheckReport:
    """max_t (||w(t)||^2 + kappa int_0^t ||Lambda^{alpha/2} w||^2) / ||w0||^2 <= 1 + tol."""
    recs = run.trajectory.records
    kappa = run.params.kappa
    w02 = run.w0_l2 ** 2
    rows = []
    ratio = 0.0
    for r in recs:
        s = r["l2"] ** 2 + kappa * r["diss_cum"]
        rows.append((r["t"], s, w02))
        if w02 > 0:
            ratio = max(ratio, s / w02)
    slack = 1 + tol - ratio if w02 > 0 else -max(row[1] for row in rows)
    ok = ratio <= 1 + tol if w02 > 0 else max(row[1] for row in rows) == 0
    return CheckReport("energy_inequality", slack, ratio, ok,
                       details={"grad_theta_l2": run.grad_theta}, rows=rows)


def generalized_energy_check(run: StabilityRun, split: SplittingParams | None = None
                             ) -> list[CheckReport]:
    """Low-part (gen1), high-part (gen2) and low-frequency-tail reports.

    gen2 is evaluated with the transport cross term entering with a plus
    sign, which is what the energy identity gives after using
    (R-perp theta . grad w, w) = 0; the form with a minus sign is reported
    separately as ``gen2_minus_form``.
    """
    if not run.gen_available:
        raise ValueError("missing spectral checkpoints: the run did not record gen integrals "
                         "(needs the etd_rk2 integrator)")
    split = split or run.split
    g = run.Theta.grid
    kappa, alpha = run.params.kappa, run.params.alpha
    K = g.power(alpha)
    phi = LowWeight().symbol(g)
    psi = HighWeight().symbol(g)
    snaps = dict(run.trajectory.snapshots)

    def state(t):
        if t in snaps:
            return snaps[t].coeffs
        raise KeyError(t)

    gen1_rows, gen2_rows, gen2m_rows = [], [], []
    gen1_slacks, gen2_slacks, gen2m_slacks = [], [], []
    for s, t in run.pairs:
        rs, rt = _record_at(run, s), _record_at(run, t)
        ws = run.low_states[s]
        # low part
        lhs1 = rt["low_l2"] ** 2
        first = _sq(g, np.exp(-kappa * (t - s) * K) * phi * ws)
        IT = rt.get(f"gen1_IT@{s!r}", 0.0)  # absent only when t == s
        IC = rt.get(f"gen1_IC@{s!r}", 0.0)
        rhs1 = first + 2 * IT + 2 * IC
        gen1_slacks.append(rhs1 - lhs1)
        gen1_rows.append((t, lhs1, rhs1))
        # high part
        Es, Et = float(split.E(s)), float(split.E(t))
        Xs, Xt = rs["high_l2"] ** 2, rt["high_l2"] ** 2
        d = {k: rt[f"gen_{k}"] - rs[f"gen_{k}"] for k in ("A", "B", "Cabs", "Tabs")}
        base = Es * Xs - 2 * kappa * d["A"] + d["B"] + 2 * d["Cabs"]
        rhs2 = base + 2 * d["Tabs"]
        rhs2m = base - 2 * d["Tabs"]
        lhs2 = Et * Xt
        gen2_slacks.append(rhs2 - lhs2)
        gen2m_slacks.append(rhs2m - lhs2)
        gen2_rows.append((t, lhs2, rhs2))
        gen2m_rows.append((t, lhs2, rhs2m))
    # energy identity behind gen2, as a bookkeeping audit
    last = run.trajectory.records[-1]
    first_rec = run.trajectory.records[0]
    ident_lhs = float(split.E(last["t"])) * last["high_l2"] ** 2 - float(split.E(0)) * first_rec["high_l2"] ** 2
    ident_rhs = -2 * kappa * last["gen_A"] + last["gen_B"] - 2 * last["gen_Csig"] - 2 * last["gen_Tpsi"]
    scale = max(abs(ident_lhs), abs(last["gen_B"]), 1e-300)
    reports = [
        CheckReport("gen1_low_part", min(gen1_slacks), max(r[1] for r in gen1_rows),
                    min(gen1_slacks) >= -_SLACK_TOL, rows=gen1_rows),
        CheckReport("gen2_high_part", min(gen2_slacks), max(r[1] for r in gen2_rows),
                    min(gen2_slacks) >= -_SLACK_TOL,
                    details={"identity_rel_defect": abs(ident_lhs - ident_rhs) / scale},
                    rows=gen2_rows),
        CheckReport("gen2_minus_form", min(gen2m_slacks), max(r[1] for r in gen2m_rows),
                    min(gen2m_slacks) >= -_SLACK_TOL,
                    details={"informational": True}, rows=gen2m_rows),
        _tail_report(run, split, psi),
    ]
    return reports


def _tail_report(run: StabilityRun, split: SplittingParams, psi: np.ndarray) -> CheckReport:
    """int_{B(rho)} |psi w^|^2 against int_{B(rho)} |k|^4 |w^|^2 and (1+t)^{-4} ||w||^2."""
    g = run.Theta.grid
    rows = []
    slack = math.inf
    const = 0.0
    for t, sw in run.trajectory.snapshot_list():
        c = sw.coeffs
        ball = g.kmag <= float(split.rho(t))
        lhs = _sq(g, np.where(ball, psi * c, 0))
        mid = _sq(g, np.where(ball, g.kmag ** 2 * c, 0))
        slack = min(slack, mid - lhs)
        w2 = _sq(g, c)
        if w2 > 0:
            const = max(const, lhs * (1 + t) ** 4 / w2)
        rows.append((t, lhs, mid))
    if not rows:
        raise ValueError("missing spectral checkpoints: no snapshots on the run")
    return CheckReport("gen2_low_frequency_tail", slack, const,
                       slack >= -_SLACK_TOL and math.isfinite(const), rows=rows)


def stability_decay_report(run: StabilityRun, factor: float = 1e-3) -> CheckReport:
    """||w||, ||phi w^||, ||psi w^|| at the final time below factor * ||w0||."""
    last = run.trajectory.records[-1]
    thr = factor * run.w0_l2
    vals = (last["l2"], last["low_l2"], last["high_l2"])
    tri = min(r["low_l2"] + r["high_l2"] - r["l2"] for r in run.trajectory.records)
    ok = all(v <= thr for v in vals) and tri >= -1e-14
    rows = [(r["t"], r["l2"], thr) for r in run.trajectory.records]
    return CheckReport("perturbation_decay", thr - max(vals), max(vals) / run.w0_l2
                       if run.w0_l2 > 0 else 0.0, ok,
                       details={"w_l2": vals[0], "low_l2": vals[1], "high_l2": vals[2],
                                "triangle_slack": tri}, rows=rows)


# -- beta decay --------------------------------------------------------------

def run_beta(U, f, params: ev.SolverParams, snapshot_stride: int = 1) -> ev.Trajectory:
    """Beta equation from 0 with the running integral of ||beta||_2 in each record."""
    fs = as_spectral(f)
    g = fs.grid
    acc = {"I": 0.0}

    def obs(info):
        for w, _, y in info.nodes:
            acc["I"] += w * math.sqrt(_sq(g, y))

    def hook(t, c):
        return {"beta_l1_cum": acc["I"]}

    return ev.evolve(SpectralField.zeros(g), ev.BetaEquation(U, fs), params,
                     snapshot_stride=snapshot_stride, observers=[obs], sample_hooks=[hook])


def lowest_active_wavenumber(c: SpectralField, rtol: float = 1e-10) -> float:
    mags = np.abs(c.coeffs)
    top = mags.max()
    if top == 0:
        return math.inf
    return float(c.grid.kmag[(mags > rtol * top) & (c.grid.kmag > 0)].min())


def fourier_splitting_check(beta_traj: ev.Trajectory, U, f, split: SplittingParams,
                            params: ev.SolverParams, rho0: float,
                            window=(1.0, None), fit_window=None) -> list[CheckReport]:
    """Pointwise spectral bound, splitting inequality, weighted decay, decay rate."""
    fs = as_spectral(f)
    g = fs.grid
    kappa, alpha = params.kappa, params.alpha
    u_l2 = norm(U, "l2")
    f_l2 = norm(fs, "l2")
    snaps = beta_traj.snapshot_list()
    if not snaps:
        raise ValueError("missing spectral checkpoints on the beta trajectory")
    recs = {r["t"]: r for r in beta_traj.records}
    # (a) |beta^(t,k)| <= c |k| ||U|| (int ||beta|| + ||f||/(rho0 kappa))
    c_hat = 0.0
    rows_a = []
    K1 = np.where(g.kmag > 0, g.kmag, np.inf)
    for t, b in snaps:
        if t == 0:
            continue
        den = u_l2 * (recs[t]["beta_l1_cum"] + f_l2 / (rho0 * kappa))
        if den == 0:
            continue
        val = float(np.max(g.area * np.abs(b.coeffs) / K1)) / den
        c_hat = max(c_hat, val)
        rows_a.append((t, val, c_hat))
    rep_a = CheckReport("beta_pointwise_spectral_bound", 0.0 if math.isfinite(c_hat) else -math.inf,
                        c_hat, math.isfinite(c_hat), rows=rows_a)
    # (b) -kappa ||Lambda^{1/2} beta||^2 <= -kappa R ||beta||^2 + kappa R int_S |beta^|^2
    slack_b = math.inf
    rows_b = []
    for t, b in snaps:
        R = float(split.r(t))
        c = b.coeffs
        lhs = -kappa * _sq(g, np.sqrt(g.kmag) * c)
        rhs = -kappa * R * _sq(g, c) + kappa * R * _sq(g, np.where(g.kmag <= R, c, 0))
        slack_b = min(slack_b, rhs - lhs)
        rows_b.append((t, lhs, rhs))
    rep_b = CheckReport("beta_splitting_inequality", slack_b, float(split.l_exponent),
                        slack_b >= -_SLACK_TOL, rows=rows_b)
    # (c) (1+t)^4 ||beta||^2 on the window is largest at its start
    t_all = beta_traj.series("t")
    b_all = beta_traj.series("l2")
    lo = window[0]
    hi = t_all[-1] if window[1] is None else window[1]
    sel = (t_all >= lo - 1e-9) & (t_all <= hi + 1e-9)
    W = (1 + t_all[sel]) ** 4 * b_all[sel] ** 2
    rows_c = [(t, w, W[0]) for t, w in zip(t_all[sel], W)]
    j = int(np.argmax(W))
    rep_c = CheckReport("beta_weighted_decay", float(W[0] - W.max()), float(t_all[sel][j]),
                        j == 0, details={"window": [float(lo), float(hi)]}, rows=rows_c)
    # (d) exponential rate against the spectral gap
    k_min = lowest_active_wavenumber(snaps[-1][1])
    predicted = kappa * k_min ** alpha
    fw = fit_window or (0.4 * hi, 0.9 * hi)
    fit = fit_decay(zip(t_all, b_all), "exponential", fw)
    rel = abs(fit.exponent - predicted) / predicted
    rep_d = CheckReport("beta_decay_rate", 0.05 - rel, fit.exponent, rel <= 0.05,
                        details={"predicted": predicted, "k_min": k_min,
                                 "r_squared": fit.r_squared, "window": list(fit.window)})
    return [rep_a, rep_b, rep_c, rep_d]


# -- functional inequalities -------------------------------------------------

def suite_field(grid: Grid, seed: int, kmax: float = 8.0) -> SpectralField:
    """Random band-limited field keyed on lattice indices (grid independent)."""
    return SpectralField(random_annulus_coeffs(grid, grid.k0, kmax, seed), grid)


def _ratio(num: float, den: float) -> float | None:
    return num / den if den > 0 else None


def functional_inequality_suite(grid: Grid, seeds=range(100), kmax: float = 8.0) -> dict:
    """Largest observed ratio per inequality over random band-limited fields.

    Keys: ``sobolev`` (||v||_4 / ||Lambda^{1/2} v||_2), ``riesz_p{p}_nu{nu}``
    (||Lambda^nu R-perp theta||_p / ||Lambda^nu theta||_p) and ``gn``
    (||v||_inf / (||Lambda^{3/2} v||_2^{2/3} ||v||_2^{1/3})).  Zero fields are
    skipped.
    """
    out: dict = {"sobolev": 0.0, "gn": 0.0}
    riesz_keys = [(p, nu) for p in (2, 4) for nu in (0.0, 0.5)]
    for p, nu in riesz_keys:
        out[f"riesz_p{p}_nu{nu:g}"] = 0.0
        out[f"riesz_p{p}_nu{nu:g}_min"] = math.inf
    count = 0
    for seed in seeds:
        v = suite_field(grid, int(seed), kmax)
        if norm(v, "l2") == 0:
            continue
        count += 1
        r = _ratio(norm(v, "lp", p=4), norm(v, "hs", s=0.5))
        out["sobolev"] = max(out["sobolev"], r)
        den = norm(v, "hs", s=1.5) ** (2 / 3) * norm(v, "l2") ** (1 / 3)
        out["gn"] = max(out["gn"], _ratio(norm(v, "linf"), den))
        u = riesz_perp(v)
        for p, nu in riesz_keys:
            vn = v if nu == 0 else SpectralField(v.coeffs * grid.power(nu), grid)
            un = u if nu == 0 else tuple(SpectralField(c.coeffs * grid.power(nu), grid) for c in u)
            kind = "l2" if p == 2 else "lp"
            kw = {} if p == 2 else {"p": p}
            key = f"riesz_p{p}_nu{nu:g}"
            r = _ratio(norm(un, kind, **kw), norm(vn, kind, **kw))
            out[key] = max(out[key], r)
            out[key + "_min"] = min(out[key + "_min"], r)
    out["count"] = count
    return out
