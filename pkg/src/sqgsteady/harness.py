"""Scenario runner: config in, artifacts plus manifest out.

Every run writes under ``<output root>/<config hash>/``.  NDJSON and CSV
artifacts contain no timestamps or timings, so an identical config
reproduces them byte for byte (at a fixed FFT thread count).
"""

from __future__ import annotations

import concurrent.futures as cf
import hashlib
import itertools
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import checks, steady as st, stability as sb
from . import evolution as ev
from .config import RunConfig
from .errors import SQGError, SnapshotError
from .forcing import ForceSpec, make_annulus_force
from .reports import CheckReport, ndjson_line, rows_to_csv, to_ndjson
from .snapshot import write_snapshot
from .spectral import (Grid, SpectralField, as_spectral, make_grid, norm, riesz_perp,
                       set_fft_workers, x_norm)

OUTPUT_ENV = "SQGSTEADY_OUTPUT"
TRACE_KEYS = ("i", "l2", "h_half", "h1", "h_3half", "y", "ratio", "residual")


@dataclass
class ExitReport:
    exit_code: int
    out_dir: Path
    summary: dict = field(default_factory=dict)
    reports: list = field(default_factory=list)
    error: str = ""

    @property
    def ok(self) -> bool:
        return self.exit_code == 0


def output_root(cli_value=None, cfg: RunConfig | None = None) -> Path:
    if cli_value:
        return Path(cli_value)
    if cfg is not None and cfg.output_dir:
        return Path(cfg.output_dir)
    return Path(os.environ.get(OUTPUT_ENV, "runs"))


# -- builders -----------------------------------------------------------------

def build_grid(cfg: RunConfig, n: int | None = None) -> Grid:
    g = cfg.grid
    return make_grid(n or g.n, g.box_length, g.dealias_fraction)


def build_force(cfg: RunConfig, grid: Grid) -> SpectralField:
    f = cfg.force
    if f.amplitude == 0:
        return SpectralField.zeros(grid)
    spec = ForceSpec(f.rho0, f.rho1, f.amplitude, f.seed, f.target_x_norm)
    return as_spectral(make_annulus_force(spec, grid, cfg.physics.alpha))


def steady_params(cfg: RunConfig) -> st.SteadyParams:
    s = cfg.steady
    return st.SteadyParams(kappa=cfg.physics.kappa, alpha=cfg.physics.alpha,
                           inner_tol=s.inner_tol, inner_max_iter=s.inner_max_iter,
                           outer_tol=s.outer_tol, outer_max_iter=s.outer_max_iter,
                           dt=s.route_dt, tail_tol=s.tail_tol, quadrature=s.quadrature)


def solver_params(cfg: RunConfig, **overrides) -> ev.SolverParams:
    s = cfg.solver
    kw = dict(kappa=cfg.physics.kappa, alpha=cfg.physics.alpha, epsilon=cfg.physics.epsilon,
              dt=s.dt, t_final=s.t_final, integrator=s.integrator,
              output_stride=s.output_stride, cfl_limit=s.cfl_limit)
    kw.update(overrides)
    return ev.SolverParams(**kw)


def certificate_tol(route: str, params: st.SteadyParams) -> float:
    """Residual level a converged run must reach, before the kappa*k_max scale.

    The time-integral route carries its quadrature error into the residual,
    so it is held to 1e-8 rather than the outer tolerance.
    """
    return params.outer_tol if route == "direct" else max(params.outer_tol, 1e-8)


# -- artifact writer ----------------------------------------------------------

class _Writer:
    def __init__(self, out_dir: Path):
        self.dir = out_dir
        self.files: list[str] = []
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise SnapshotError(f"cannot create output directory {out_dir}: {exc}") from exc

    def text(self, name: str, content: str) -> None:
        path = self.dir / name
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(content)
        except OSError as exc:
            raise SnapshotError(f"cannot write {path}: {exc}") from exc
        self.files.append(name)

    def snapshot(self, name: str, f) -> None:
        try:
            write_snapshot(f, self.dir / name)
        except OSError as exc:
            raise SnapshotError(f"cannot write {self.dir / name}: {exc}") from exc
        self.files.append(name)

    def reports(self, reports: list[CheckReport], config_hash: str, name="reports.ndjson"):
        self.text(name, to_ndjson(r.record(config_hash) for r in reports))
        for r in reports:
            if r.rows:
                self.text(f"csv/{r.check_id}.csv", rows_to_csv(r.rows))

    def manifest(self, cfg: RunConfig, exit_code: int, summary: dict) -> None:
        arts = []
        for name in sorted(set(self.files)):
            data = (self.dir / name).read_bytes()
            arts.append({"path": name, "sha256": hashlib.sha256(data).hexdigest(),
                         "bytes": len(data)})
        man = {"config_hash": cfg.config_hash, "scenario": cfg.scenario,
               "config": cfg.content(), "defaulted": list(cfg.defaulted),
               "exit_code": exit_code, "summary": summary, "artifacts": arts}
        (self.dir / "manifest.json").write_text(
            json.dumps(_jsonable(man), indent=1, sort_keys=True) + "\n")


def _jsonable(x):
    return json.loads(ndjson_line(x)) if isinstance(x, dict) else x


# -- scenarios ----------------------------------------------------------------

def _solve_steady(cfg, grid, f, params, route=None):
    route = route or cfg.steady.route
    theta, trace = st.steady_state_iteration(f, params, route=route)
    return theta, trace


def _steady_reports(cfg, grid, f, params, theta, trace, route) -> list[CheckReport]:
    kappa = cfg.physics.kappa
    thr = certificate_tol(route, params) * kappa * grid.k_max
    res = trace.final_residual
    ratios = trace.ratios
    reps = [
        CheckReport("steady_residual", thr - res, res, trace.converged and res < thr,
                    details={"route": route, "threshold": thr}),
        CheckReport("steady_contraction", 1 - max(ratios, default=0.0),
                    max(ratios, default=0.0),
                    trace.converged and all(r < 1 for r in ratios),
                    details={"iterations": len(trace.records) - 1}),
    ]
    audit = st.bootstrap_norm_audit(trace, f, params)
    reps.append(CheckReport("steady_bootstrap_audit", 0.0, audit.c_audit,
                            audit.l2_bounded and math.isfinite(audit.c_audit),
                            details={"m_observed": audit.m_observed,
                                     "non_increasing_after_transient":
                                         audit.non_increasing_after_transient,
                                     "gn_max": max(audit.gn_constants, default=0.0)}))
    return reps


def run_steady(cfg: RunConfig, w: _Writer) -> tuple[dict, list]:
    grid = build_grid(cfg)
    f = build_force(cfg, grid)
    params = steady_params(cfg)
    route = cfg.steady.route
    theta, trace = _solve_steady(cfg, grid, f, params, route)
    w.text("trace.ndjson", to_ndjson({k: r[k] for k in TRACE_KEYS} for r in trace.records))
    w.snapshot("theta.sqgf", theta)
    reps = _steady_reports(cfg, grid, f, params, theta, trace, route)
    summary = {"route": route, "converged": trace.converged,
               "iterations": len(trace.records) - 1,
               "max_ratio": max(trace.ratios, default=0.0),
               "final_residual": trace.final_residual, "theta_l2": norm(theta, "l2"),
               "f_x_norm": trace.f_x_norm, "m_observed": trace.m_observed}
    if cfg.steady.compare_routes:
        other = "time_integral" if route == "direct" else "direct"
        theta2, trace2 = _solve_steady(cfg, grid, f, params, other)
        w.text(f"trace_{other}.ndjson",
               to_ndjson({k: r[k] for k in TRACE_KEYS} for r in trace2.records))
        scale = max(norm(theta, "l2"), 1e-300)
        rel = norm(theta - theta2, "l2") / scale
        reps.append(CheckReport("steady_route_agreement", 1e-4 - rel, rel, rel <= 1e-4))
        reps += [CheckReport(r.check_id + "_" + other, r.slack_min, r.constant_observed,
                             r.passed, r.details)
                 for r in _steady_reports(cfg, grid, f, params, theta2, trace2, other)[:2]]
        summary["route_agreement"] = rel
        tt = trace2 if other == "time_integral" else trace
        budget = st.calibrate_budget(tt, f, params)
        summary.update(budget_c=budget.c, z_threshold=budget.z_threshold)
    if cfg.steady.uniqueness_seeds:
        seeds = [None if s == "zero" else s for s in cfg.steady.uniqueness_seeds]
        up = st.uniqueness_probe(f, params, seeds, route=route)
        reps.append(CheckReport("steady_uniqueness", 1e-6 - up.max_relative, up.max_relative,
                                up.ok, details={"labels": up.labels,
                                                "failures": [str(x) for x in up.failures]}))
        summary["uniqueness_max_relative"] = up.max_relative
    return summary, reps


def run_evolve(cfg: RunConfig, w: _Writer) -> tuple[dict, list]:
    grid = build_grid(cfg)
    f = build_force(cfg, grid)
    e = cfg.evolve
    theta0 = sb.random_perturbation(grid, e.initial_seed, e.initial_l2, e.initial_kmax) \
        if e.initial_l2 > 0 else SpectralField.zeros(grid)
    params = solver_params(cfg)
    traj = ev.evolve(theta0, ev.FullSQG(f), params)
    w.text("monitors.ndjson", to_ndjson(traj.records))
    w.snapshot("final.sqgf", traj.final)
    reps = []
    if params.epsilon == 0 and params.integrator == "etd_rk2":
        last, first = traj.records[-1], traj.records[0]
        lhs = 0.5 * (last["l2"] ** 2 - first["l2"] ** 2)
        rhs = -params.kappa * last["diss_cum"] + last["work_cum"]
        scale = max(abs(lhs), params.kappa * last["diss_cum"], abs(last["work_cum"]), 1e-300)
        rel = abs(lhs - rhs) / scale
        reps.append(CheckReport("evolve_energy_balance", 1e-6 - rel, rel, rel <= 1e-6))
    summary = {"t_final": params.t_final, "final_l2": traj.records[-1]["l2"],
               "samples": len(traj.records)}
    return summary, reps


def run_stability_scenario(cfg: RunConfig, w: _Writer) -> tuple[dict, list]:
    grid = build_grid(cfg)
    f = build_force(cfg, grid)
    params = steady_params(cfg)
    theta, trace = _solve_steady(cfg, grid, f, params, "direct")
    w.snapshot("theta.sqgf", theta)
    w.text("trace.ndjson", to_ndjson({k: r[k] for k in TRACE_KEYS} for r in trace.records))
    s = cfg.stability
    w0 = sb.random_perturbation(grid, s.w0_seed, s.w0_l2, s.w0_kmax) if s.w0_l2 > 0 \
        else SpectralField.zeros(grid)
    sp = solver_params(cfg, t_final=s.t_final / cfg.physics.kappa)
    split = sb.SplittingParams(s.l_exponent, s.gamma, cfg.physics.kappa)
    force = f if norm(f, "l2") > 0 else None
    run = sb.run_stability(theta, w0, sp, force=force, split=split,
                           cross_check=s.cross_check)
    keys = ("t", "l2", "h_half", "low_l2", "high_l2", "theta_linf", "diss_cum")
    w.text("monitors.ndjson", to_ndjson({k: r[k] for k in keys} for r in run.trajectory.records))
    w.snapshot("w_final.sqgf", run.trajectory.final)
    reps = [sb.energy_inequality_check(run, s.energy_tol)]
    if s.w0_l2 > 0:
        reps.append(sb.stability_decay_report(run, s.decay_factor))
        reps += sb.generalized_energy_check(run)
    if s.cross_check:
        e = run.cross_check_error
        reps.append(CheckReport("stability_cross_check", 1e-8 - e, e, e <= 1e-8))
    if s.control_run:
        reps.append(sb.control_run(theta, force, sp))
    summary = {"theta_l2": norm(theta, "l2"), "grad_theta_l2": run.grad_theta,
               "w0_l2": run.w0_l2, "w_final_l2": run.trajectory.records[-1]["l2"],
               "cross_check_error": run.cross_check_error}
    # observed exponential rate of ||w||_2 (no target value to compare against)
    t_s, l2_s = run.series("t"), run.series("l2")
    window = (0.2 * sp.t_final, 0.8 * sp.t_final)
    sel = (t_s >= window[0]) & (t_s <= window[1])
    if s.w0_l2 > 0 and sel.sum() >= 10 and (l2_s[sel] > 0).all():
        fit = sb.fit_decay(zip(t_s, l2_s), "exponential", window)
        summary.update(observed_decay_rate=fit.exponent, decay_fit_r_squared=fit.r_squared)
    return summary, reps


def run_decay(cfg: RunConfig, w: _Writer) -> tuple[dict, list]:
    grid = build_grid(cfg)
    f = build_force(cfg, grid)
    params = steady_params(cfg)
    theta, trace = _solve_steady(cfg, grid, f, params, "direct")
    d = cfg.decay
    U = riesz_perp(theta)
    stride = max(1, int(round(0.1 / d.dt)))
    sp = solver_params(cfg, dt=d.dt, t_final=d.t_final, output_stride=stride)
    traj = sb.run_beta(U, f, sp, snapshot_stride=5)
    w.text("beta.ndjson", to_ndjson({k: r[k] for k in ("t", "l2", "beta_l1_cum")}
                                    for r in traj.records))
    split = sb.SplittingParams(d.l_exponent, kappa=cfg.physics.kappa)
    reps = sb.fourier_splitting_check(traj, U, f, split, sp, cfg.force.rho0,
                                      window=(d.window_start, None))
    summary = {"u_l2": norm(U, "l2"), "beta_max": float(traj.series("l2").max())}
    return summary, reps


def run_verify(cfg: RunConfig, w: _Writer) -> tuple[dict, list]:
    grid = build_grid(cfg)
    v = cfg.verify
    reps = checks.verify_all(grid, cfg.physics.kappa, v.suite_seeds, v.envelope_seeds,
                             v.envelope_rho0, v.envelope_rho1, v.compare_n)
    return {"reports": len(reps), "passed": sum(r.passed for r in reps)}, reps


def _sub_run(args):
    cfg, root, threads = args
    if threads:
        set_fft_workers(threads)
    rep = run_scenario(cfg, root, threads)
    return rep.exit_code, rep.summary, [r.record(cfg.config_hash) for r in rep.reports]


def expand_sweep(cfg: RunConfig) -> list[tuple[dict, RunConfig]]:
    """Sub-run configurations of a sweep, in grid order over sorted keys."""
    params = cfg.sweep.parameters
    keys = sorted(params)
    out = []
    for combo in itertools.product(*(params[k] for k in keys)):
        sub = cfg.replace(scenario=cfg.sweep.scenario)
        for k, val in zip(keys, combo):
            sub = sub.with_override(k, val)
        out.append((dict(zip(keys, combo)), sub))
    return out


def run_sweep(cfg: RunConfig, w: _Writer, threads=None) -> tuple[dict, list]:
    expanded = expand_sweep(cfg)
    subs = [sub for _, sub in expanded]
    jobs = [(s, w.dir / "runs", threads) for s in subs]
    if cfg.sweep.workers > 1 and len(jobs) > 1:
        with cf.ProcessPoolExecutor(max_workers=cfg.sweep.workers) as pool:
            results = list(pool.map(_sub_run, jobs))
    else:
        results = [_sub_run(j) for j in jobs]
    lines = []
    for i, ((overrides, sub), (code, summary, recs)) in enumerate(zip(expanded, results)):
        lines.append({"index": i, "overrides": overrides,
                      "config_hash": sub.config_hash, "exit_code": code,
                      "summary": summary, "all_pass": all(r["pass"] for r in recs)})
    w.text("summary.ndjson", to_ndjson(lines))
    reps = [CheckReport("sweep_subruns_ok", 0.0, float(len(lines)),
                        all(l["exit_code"] == 0 for l in lines))]
    return {"runs": len(lines), "failed": sum(l["exit_code"] != 0 for l in lines)}, reps


SCENARIO_FUNCS = {"steady": run_steady, "evolve": run_evolve,
                  "stability": run_stability_scenario, "decay": run_decay,
                  "verify": run_verify}


def run_scenario(cfg: RunConfig, root=None, threads: int | None = None) -> ExitReport:
    """Run ``cfg.scenario``; errors become a nonzero exit code plus error.json."""
    out_dir = output_root(root, cfg) / cfg.config_hash
    try:
        w = _Writer(out_dir)
    except SnapshotError as exc:
        return ExitReport(exc.exit_code, out_dir, error=str(exc))
    summary, reps, code, err = {}, [], 0, ""
    try:
        if cfg.scenario == "sweep":
            summary, reps = run_sweep(cfg, w, threads)
        else:
            summary, reps = SCENARIO_FUNCS[cfg.scenario](cfg, w)
        w.reports(reps, cfg.config_hash)
    except SQGError as exc:
        code, err = exc.exit_code, f"{type(exc).__name__}: {exc}"
    except OSError as exc:
        code, err = 4, f"{type(exc).__name__}: {exc}"
    except ValueError as exc:
        code, err = 2, f"{type(exc).__name__}: {exc}"
    if err:
        w.text("error.json", json.dumps({"error": err, "exit_code": code}, sort_keys=True) + "\n")
    summary["all_pass"] = all(r.passed for r in reps) if reps else not err
    try:
        w.manifest(cfg, code, summary)
    except OSError as exc:
        return ExitReport(4, out_dir, summary, reps, f"cannot write manifest: {exc}")
    return ExitReport(code, out_dir, summary, reps, err)
