"""End-to-end acceptance runs, one test per criterion.

Each test evaluates its criterion at the stated tolerance from the reports
of the harness runs, appends a PASS/FAIL line to the terminal summary and
then asserts.  The heavy runs are module-scoped and shared.
"""

import math
import time
from pathlib import Path

import pytest

from conftest import ACCEPTANCE_LINES
from sqgsteady.config import parse_config
from sqgsteady.harness import build_grid, expand_sweep, run_scenario
from sqgsteady.spectral import set_fft_workers

pytestmark = pytest.mark.slow

CONFIGS = Path(__file__).resolve().parents[1] / "configs" / "acceptance"
SLACK_TOL = 1e-8


def record(n: int, ok: bool, text: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'}  criterion {n}: {text}"
    ACCEPTANCE_LINES.append(line)
    print(line)


class Run:
    def __init__(self, cfg, exit_report, seconds):
        self.cfg = cfg
        self.exit = exit_report
        self.seconds = seconds
        self.reports = {r.check_id: r for r in exit_report.reports}

    def __getitem__(self, check_id):
        return self.reports[check_id]


def timed(cfg, root):
    t0 = time.perf_counter()
    rep = run_scenario(cfg, root, threads=1)
    return Run(cfg, rep, time.perf_counter() - t0)


def by_alpha(name, root):
    return {float(o["physics.alpha"]): timed(sub, root)
            for o, sub in expand_sweep(parse_config(CONFIGS / name))}


@pytest.fixture(scope="module", autouse=True)
def single_thread():
    set_fft_workers(1)


@pytest.fixture(scope="module")
def root(tmp_path_factory):
    return tmp_path_factory.mktemp("acceptance")


@pytest.fixture(scope="module")
def verify_run(root):
    return timed(parse_config(CONFIGS / "verify.toml"), root)


@pytest.fixture(scope="module")
def routes(root):
    return by_alpha("routes.toml", root)


@pytest.fixture(scope="module")
def force_sweep(root):
    cfg = parse_config(CONFIGS / "force_sweep.toml")
    out = {}
    t0 = time.perf_counter()
    for o, sub in expand_sweep(cfg):
        out[(float(o["physics.alpha"]), float(o["force.target_x_norm"]))] = timed(sub, root)
    return out, time.perf_counter() - t0


@pytest.fixture(scope="module")
def decay_run(root):
    return timed(parse_config(CONFIGS / "decay.toml"), root)


@pytest.fixture(scope="module")
def stability(root):
    return by_alpha("stability.toml", root)


# -- shared criterion bodies ---------------------------------------------------

def route_equivalence(run):
    g = build_grid(run.cfg)
    thr = 1e-8 * run.cfg.physics.kappa * g.k_max
    agree = run["steady_route_agreement"].constant_observed
    res_d = run["steady_residual"].constant_observed
    res_t = run["steady_residual_time_integral"].constant_observed
    ok = (run.exit.exit_code == 0 and agree <= 1e-4 and res_d < thr and res_t < thr
          and run.seconds < 600)
    return ok, (f"relative L2 gap {agree:.2e} (<= 1e-4), residuals direct {res_d:.2e}, "
                f"time {res_t:.2e} (< {thr:.2e}), {run.seconds:.0f} s")


def contraction(run, sweep, alpha):
    con = run["steady_contraction"]
    ratios = [(fx, r.exit.summary.get("max_ratio", math.inf), r.exit.exit_code)
              for (a, fx), r in sorted(sweep[0].items()) if a == alpha]
    maxes = [m for _, m, _ in ratios]
    monotone = all(b >= a for a, b in zip(maxes, maxes[1:]))
    ok = (con.passed and con.constant_observed < 1 and monotone
          and all(code == 0 for *_, code in ratios) and all(m < 1 for m in maxes))
    text = ", ".join(f"{fx:g}: {m:.3e}" for fx, m, _ in ratios)
    return ok, (f"max r_i = {con.constant_observed:.3e} < 1; max r_i by ||f||_X "
                f"{{{text}}} non-decreasing={monotone}")


def stability_checks(run):
    w0 = run.cfg.stability.w0_l2
    thr = 1e-3 * w0
    dec = run["perturbation_decay"].details
    energy = run["energy_inequality"].constant_observed
    control = run["control_fixed_point"].constant_observed
    vals = (dec["w_l2"], dec["low_l2"], dec["high_l2"])
    ok = (run.exit.exit_code == 0 and all(v < thr for v in vals) and energy <= 1 + 1e-6
          and control <= 1e-9 and run.seconds < 900)
    return ok, (f"final ||w||, ||phi w^||, ||psi w^|| = {vals[0]:.1e}, {vals[1]:.1e}, "
                f"{vals[2]:.1e} (< {thr:.0e}); energy ratio {energy:.9f}; control "
                f"{control:.1e} (<= 1e-9); {run.seconds:.0f} s")


# -- criteria ------------------------------------------------------------------

def test_criterion_01_operator_exactness(verify_run):
    ops = {k: r for k, r in verify_run.reports.items() if k.startswith("operator_")}
    worst = max(r.constant_observed for r in ops.values())
    ok = len(ops) == 8 and worst <= 1e-12
    record(1, ok, f"{len(ops)} operator checks, worst relative error {worst:.2e} (<= 1e-12)")
    assert ok


def test_criterion_02_envelope(verify_run):
    env = [verify_run[f"envelope_p{p}_nu{nu}"] for p, nu in
           (("2", "0"), ("2", "0.5"), ("4", "0.5"), ("inf", "0"))]
    worst = max(r.constant_observed for r in env)
    shell = verify_run["envelope_single_shell_equality"].constant_observed
    forces = {r.details["forces"] for r in env}
    ok = worst <= 1 + 1e-10 and shell <= 1e-10 and forces == {50}
    record(2, ok, f"max envelope ratio {worst:.12f} (<= 1 + 1e-10) over 50 forces; "
                  f"single-shell deviation {shell:.1e}")
    assert ok


def test_criterion_03_route_equivalence(routes):
    ok, text = route_equivalence(routes[1.0])
    record(3, ok, text)
    assert ok


def test_criterion_04_contraction(routes, force_sweep):
    ok, text = contraction(routes[1.0], force_sweep, 1.0)
    ok = ok and force_sweep[1] < 1800
    record(4, ok, text)
    assert ok


def test_criterion_05_uniqueness(routes):
    rep = routes[1.0]["steady_uniqueness"]
    ok = rep.passed and rep.constant_observed <= 1e-6 and len(rep.details["labels"]) == 3
    record(5, ok, f"starts {rep.details['labels']}, max pairwise relative L2 gap "
                  f"{rep.constant_observed:.2e} (<= 1e-6)")
    assert ok


def test_criterion_06_beta_decay(decay_run):
    wd = decay_run["beta_weighted_decay"]
    rate = decay_run["beta_decay_rate"]
    pred = rate.details["predicted"]
    rel = abs(rate.constant_observed - pred) / pred
    ok = decay_run.exit.exit_code == 0 and wd.passed and wd.constant_observed == 1.0 and rel <= 0.05
    record(6, ok, f"argmax of (1+t)^4||beta||^2 on [1,50] at t = {wd.constant_observed:g}; "
                  f"fitted rate {rate.constant_observed:.4f} vs kappa k_min^alpha = {pred:.4f} "
                  f"(k_min = {rate.details['k_min']:g}, {rel:.2%} <= 5%)")
    assert ok


def test_criterion_07_stability(stability):
    ok, text = stability_checks(stability[1.0])
    record(7, ok, text)
    assert ok


def test_criterion_08_generalized_energy(stability):
    run = stability[1.0]
    reps = [run[k] for k in ("gen1_low_part", "gen2_high_part", "gen2_low_frequency_tail")]
    pairs = {len(run["gen1_low_part"].rows), len(run["gen2_high_part"].rows)}
    worst = min(r.slack_min for r in reps)
    ok = worst >= -SLACK_TOL and pairs == {20}
    minus = run["gen2_minus_form"].slack_min
    record(8, ok, f"min slack gen1 {reps[0].slack_min:.2e}, gen2 {reps[1].slack_min:.2e}, "
                  f"tail {reps[2].slack_min:.2e} (>= -1e-8) at 20 pairs; "
                  f"minus-sign form {minus:.2e}")
    assert ok


def test_criterion_09_functional_suite(verify_run):
    rz = verify_run["fi_riesz_p2"]
    sob = verify_run["fi_sobolev"]
    gn = verify_run["fi_gn"]
    finite = all(math.isfinite(r.constant_observed) and r.constant_observed > 0 for r in (sob, gn))
    changes = [r.details["relative_change"] for r in (sob, gn)]
    ok = rz.passed and abs(rz.constant_observed - 1) <= 1e-12 and finite and max(changes) <= 0.10
    record(9, ok, f"Riesz p=2 constant {rz.constant_observed:.15f}; Sobolev "
                  f"{sob.constant_observed:.4f} ({changes[0]:.2%} change n=64 -> 128), GN "
                  f"{gn.constant_observed:.4f} ({changes[1]:.2%})")
    assert ok


def test_criterion_10_subcritical(routes, force_sweep, stability):
    t0 = routes[1.5].seconds + force_sweep[1] / 2 + stability[1.5].seconds
    parts = [route_equivalence(routes[1.5]), contraction(routes[1.5], force_sweep, 1.5),
             stability_checks(stability[1.5])]
    ok = all(p[0] for p in parts) and t0 < 2700
    record(10, ok, "alpha = 1.5: [3] " + parts[0][1] + " | [4] " + parts[1][1]
           + " | [7] " + parts[2][1])
    assert ok


def test_criterion_11_determinism(root, tmp_path_factory, verify_run, decay_run, force_sweep):
    again = tmp_path_factory.mktemp("acceptance_rerun")
    pairs = []
    for run in (verify_run, decay_run):
        rerun = run_scenario(run.cfg, again, threads=1)
        pairs.append((run.exit.out_dir, rerun.out_dir))
    sweep_cfg = parse_config(CONFIGS / "force_sweep.toml")
    a = run_scenario(sweep_cfg, tmp_path_factory.mktemp("sweep_a"), threads=1)
    b = run_scenario(sweep_cfg, tmp_path_factory.mktemp("sweep_b"), threads=1)
    pairs.append((a.out_dir, b.out_dir))
    compared, differ = 0, []
    for da, db in pairs:
        files = sorted(p.relative_to(da) for p in da.rglob("*.ndjson"))
        assert files
        for rel in files:
            compared += 1
            if (da / rel).read_bytes() != (db / rel).read_bytes():
                differ.append(str(rel))
    ok = not differ
    record(11, ok, f"{compared} NDJSON files byte-identical across reruns "
                   f"(verify, decay, force sweep); differing: {differ or 'none'}")
    assert ok
