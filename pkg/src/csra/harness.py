"""Experiment orchestration: seeded Monte-Carlo loops, sweeps, CSV emission,
and the oracle-equivalence validation suite.

Every CSV row carries the master seed and a config hash that reproduce it;
output bytes are independent of the parallelism degree (records are keyed
by trial index, and timing never reaches the CSVs).
"""

import csv
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import (SystemConfig, SlotPlan, config_hash, control_window,
                     slot_plan, trial_rng)
from .model import (PilotBook, build_pilot_book, draw_activity, draw_channels,
                    draw_data, transmit_receive, circular_convolve)
from .sensing import (SensingOperator, DenseOperator, build_operator,
                      randomized_multiplier, rip_constant_exact)
from .recovery import cosamp, bpdn, debias, BpdnConfig
from .detection import detect_active, equalize_demodulate, tally, roc_sweep, TrialMetrics
from .bounds import (FadingModel, BoundInputs, detection_error_bounds,
                     rate_lower_bound, rate_upper_bound, aloha_throughput,
                     bpdn_stability_constant, margin_tail_integral,
                     pilot_split_rate_gap, noise_ball_radius, RATE_UNITS)


# ---------------------------------------------------------------------------
# Sweep and trial records
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepSpec:
    variable: str        # "alpha" | "xi_thr" | "snr_db" | "lambda"
    grid: tuple
    trials: int = 1

    def __post_init__(self):
        if self.variable not in ("alpha", "xi_thr", "snr_db", "lambda"):
            raise ValueError(f"unknown sweep variable {self.variable!r}")
        g = np.asarray(self.grid, dtype=float)
        if g.size == 0:
            raise ValueError("sweep grid is empty")
        if g.size > 1 and not np.all(np.diff(g) > 0):
            raise ValueError("sweep grid must be strictly increasing")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")


@dataclass
class TrialRecord:
    """One trial's metrics plus cached energies (for ROC re-thresholding)."""

    trial_index: int
    metrics: TrialMetrics
    user_energies: np.ndarray
    active: np.ndarray
    residual_norm: float
    solver_iterations: int
    solver_converged: bool
    history: list = field(default_factory=list)
    elapsed: float = 0.0


@dataclass(frozen=True)
class Scenario:
    """Scenario-level state shared by all trials of one config."""

    cfg: SystemConfig
    window: np.ndarray
    plan: SlotPlan
    pilots: PilotBook
    xi: np.ndarray | None
    op: SensingOperator
    eps: float


def make_scenario(cfg: SystemConfig) -> Scenario:
    window = control_window(cfg)
    plan = slot_plan(cfg, window)
    pilots = build_pilot_book(cfg, window=window)
    xi = randomized_multiplier(cfg)
    op = build_operator(cfg, pilots=pilots, window=window, xi=xi)
    return Scenario(cfg=cfg, window=window, plan=plan, pilots=pilots, xi=xi,
                    op=op, eps=noise_ball_radius(cfg))


def run_trial(cfg: SystemConfig, trial_index: int,
              scenario: Scenario | None = None) -> TrialRecord:
    """Full chain for one trial: activity -> channels -> data -> frame ->
    recovery -> detection -> demodulation -> tally. Deterministic per
    (cfg.seed, trial_index); solver non-convergence is recorded, never
    dropped."""
    if scenario is None:
        scenario = make_scenario(cfg)
    t0 = time.perf_counter()
    rng = trial_rng(cfg, trial_index)
    activity = draw_activity(cfg, rng)
    channels = draw_channels(cfg, activity, rng)
    data = draw_data(cfg, activity, rng)
    frame = transmit_receive(cfg, scenario.pilots, data, channels, rng,
                             window=scenario.window, plan=scenario.plan,
                             xi=scenario.xi)
    discarded = False
    if cfg.solver == "cosamp":
        rec = cosamp(scenario.op, frame.y_window, k=max(cfg.k1 * cfg.k2, 1))
    else:
        rec = bpdn(scenario.op, frame.y_window, scenario.eps)
        discarded = frame.noise_window_norm > scenario.eps
    detected = detect_active(rec.user_energies, cfg.xi_thr)
    rx_bits, n_erased = equalize_demodulate(frame.y_freq, rec.h_hat,
                                            scenario.plan, detected,
                                            cfg.modulation)
    metrics = tally(activity.active, detected, frame.tx_bits, rx_bits,
                    cfg.modulation, n_erased=n_erased, discarded=discarded,
                    seed=trial_index, include_missed=cfg.include_missed_in_ser)
    return TrialRecord(trial_index=trial_index, metrics=metrics,
                       user_energies=rec.user_energies, active=activity.active,
                       residual_norm=rec.residual_norm,
                       solver_iterations=rec.iterations,
                       solver_converged=rec.converged, history=rec.history,
                       elapsed=time.perf_counter() - t0)


def _run_chunk(args):
    cfg, indices = args
    scenario = make_scenario(cfg)
    return [run_trial(cfg, i, scenario) for i in indices]


def run_trials(cfg: SystemConfig, n_trials: int, threads: int = 1) -> list[TrialRecord]:
    """Trial-parallel chunked map; results are identical for any degree of
    parallelism (pure per-trial streams, records sorted by index)."""
    indices = list(range(n_trials))
    if threads <= 1 or n_trials <= 1:
        scenario = make_scenario(cfg)
        return [run_trial(cfg, i, scenario) for i in indices]
    chunks = [c.tolist() for c in np.array_split(indices, min(threads, n_trials))]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(_run_chunk, [(cfg, c) for c in chunks]))
    records = [r for part in parts for r in part]
    records.sort(key=lambda r: r.trial_index)
    return records


def aggregate(records: list[TrialRecord]) -> dict:
    """Batch averages; discarded trials are excluded from the averages and
    reported as a count."""
    kept = [r for r in records if not r.metrics.discarded]
    sers = [r.metrics.ser for r in kept if not math.isnan(r.metrics.ser)]
    sers_det = [r.metrics.ser_detected_only for r in kept
                if not math.isnan(r.metrics.ser_detected_only)]
    p_md = [r.metrics.n_md / r.metrics.n_active_true
            for r in kept if r.metrics.n_active_true > 0]
    u_max = len(records[0].user_energies) if records else 0
    p_fa = [r.metrics.n_fa / (u_max - r.metrics.n_active_true)
            for r in kept if u_max - r.metrics.n_active_true > 0]
    mean = lambda xs: float(np.mean(xs)) if xs else float("nan")
    return {"ser": mean(sers), "ser_detected_only": mean(sers_det),
            "p_md": mean(p_md), "p_fa": mean(p_fa),
            "discarded": len(records) - len(kept), "trials": len(records)}


# ---------------------------------------------------------------------------
# CSV emission (repr-of-float cells: shortest round-trip, byte-stable)
# ---------------------------------------------------------------------------

def _fmt(x):
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_csv(path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])


LINK_HEADER = ["alpha", "ser", "p_md", "p_fa", "trials", "discarded", "seed",
               "ser_detected_only", "cfg_hash"]
ROC_HEADER = ["xi", "p_md", "p_fa", "trials", "alpha", "seed", "cfg_hash"]
BOUNDS_HEADER = ["alpha", "delta2k", "m", "n", "sigma2", "xi", "pmd_bound",
                 "pfa_bound_variant", "pfa_bound", "rate_lower_raw",
                 "rate_lower", "rate_upper", "units", "cfg_hash"]
THROUGHPUT_HEADER = ["lam", "b_slots", "pr_rate", "rate", "throughput"]


def sweep_alpha(cfg: SystemConfig, spec: SweepSpec, out_path=None,
                threads: int = 1) -> list[list]:
    """Link-simulation sweep over the pilot power fraction."""
    rows = []
    for alpha in spec.grid:
        cfg_a = cfg.with_(alpha=float(alpha))
        agg = aggregate(run_trials(cfg_a, spec.trials, threads))
        rows.append([float(alpha), agg["ser"], agg["p_md"], agg["p_fa"],
                     spec.trials, agg["discarded"], cfg.seed,
                     agg["ser_detected_only"], config_hash(cfg_a)])
    if out_path is not None:
        write_csv(out_path, LINK_HEADER, rows)
    return rows


def sweep_roc(cfg: SystemConfig, spec: SweepSpec, out_path=None,
              threads: int = 1) -> list[list]:
    """One solve per trial, then re-threshold cached energies over the
    xi grid."""
    records = run_trials(cfg, spec.trials, threads)
    points = roc_sweep(records, spec.grid)
    h = config_hash(cfg)
    rows = [[xi, p_md, p_fa, spec.trials, cfg.alpha, cfg.seed, h]
            for xi, p_md, p_fa in points]
    if out_path is not None:
        write_csv(out_path, ROC_HEADER, rows)
    return rows


def emit_bounds(cfg: SystemConfig, alpha_grid, xi: float, delta_2k: float,
                fading: FadingModel | None = None, cutoff_delta: float = 0.0,
                out_path=None) -> list[list]:
    """Closed-form bound rows over an alpha grid. xi is on the channel-norm
    scale; rate_lower consumes the (clamped) pmd bound of the same row."""
    if fading is None:
        fading = FadingModel.from_taps(cfg.k1)
    h = config_hash(cfg)
    rows = []
    for alpha in alpha_grid:
        inputs = BoundInputs(delta_2k=delta_2k, m=cfg.m, n=cfg.n,
                             alpha=float(alpha), sigma2=cfg.sigma2, k2=cfg.k2,
                             xi=xi)
        det = detection_error_bounds(inputs, fading, cutoff_delta)
        lower = rate_lower_bound(inputs, fading, pmd=det.pmd)
        upper = rate_upper_bound(inputs, fading)
        rows.append([float(alpha), delta_2k, cfg.m, cfg.n, cfg.sigma2, xi,
                     det.pmd, det.variant, det.pfa, lower.raw, lower.value,
                     upper, RATE_UNITS, h])
    if out_path is not None:
        write_csv(out_path, BOUNDS_HEADER, rows)
    return rows


def emit_throughput(lambda_grid, b_slots: int, pr_rate: float, rate: float,
                    out_path=None) -> list[list]:
    rows = [[float(lam), b_slots, pr_rate, rate,
             aloha_throughput(float(lam), b_slots, pr_rate, rate)]
            for lam in lambda_grid]
    if out_path is not None:
        write_csv(out_path, THROUGHPUT_HEADER, rows)
    return rows


def dump_recovery_diagnostics(record: TrialRecord, path) -> None:
    """Per-trial solver trace: iteration, residual_norm, sparsity."""
    write_csv(path, ["iteration", "residual_norm", "sparsity"],
              [[it, res, nnz] for it, res, nnz in record.history])


# ---------------------------------------------------------------------------
# Validation suite (oracle equivalences) -- `csra validate`
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def adjoint_mismatch(op, rng: np.random.Generator, pairs: int = 100) -> float:
    """max over random (x, y) of |<Ax,y> - <x,A*y>| / max(1, |<Ax,y>|)."""
    worst = 0.0
    m, n_cols = op.shape
    for _ in range(pairs):
        x = rng.standard_normal(n_cols) + 1j * rng.standard_normal(n_cols)
        y = rng.standard_normal(m) + 1j * rng.standard_normal(m)
        lhs = np.vdot(y, op.apply(x))
        rhs = np.vdot(op.adjoint(y), x)
        worst = max(worst, abs(lhs - rhs) / max(1.0, abs(lhs)))
    return worst


def _toy_config(**overrides) -> SystemConfig:
    base = dict(n=256, m=64, window_mode="random", t_cp=32, u_max=8, k1=1,
                k2=5, b_slots=8, alpha=0.5, snr_db=20.0, modulation="bpsk",
                bits_per_user=16, seed=777, trials=10, sensing_mode="plain")
    base.update(overrides)
    return SystemConfig(**base)


def _check_fft_convolution() -> CheckResult:
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(20):
        n = 8
        h = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        s = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        circ = np.array([[h[(i - j) % n] for j in range(n)] for i in range(n)])
        worst = max(worst, float(np.max(np.abs(circular_convolve(h, s) - circ @ s))))
    return CheckResult("fft_vs_direct_convolution", worst <= 1e-9,
                       f"max deviation {worst:.3e}")


def _check_operator_dense() -> CheckResult:
    rng = np.random.default_rng(102)
    worst = 0.0
    for mode in ("plain", "randomized"):
        op = build_operator(_toy_config(sensing_mode=mode))
        dense = op.materialize()
        for _ in range(10):
            h = rng.standard_normal(op.shape[1]) + 1j * rng.standard_normal(op.shape[1])
            delta = np.abs(op.apply(h) - dense @ h)
            worst = max(worst, float(np.max(delta) / max(1.0, np.max(np.abs(dense @ h)))))
    return CheckResult("matrix_free_vs_dense", worst <= 1e-10,
                       f"max relative deviation {worst:.3e}")


def _check_adjoint() -> CheckResult:
    rng = np.random.default_rng(103)
    worst = max(adjoint_mismatch(build_operator(_toy_config(sensing_mode=m)), rng)
                for m in ("plain", "randomized"))
    return CheckResult("adjoint_identity", worst <= 1e-10,
                       f"max mismatch {worst:.3e}")


def _check_rip_monotone() -> CheckResult:
    rng = np.random.default_rng(104)
    mat = rng.standard_normal((12, 16)) + 1j * rng.standard_normal((12, 16))
    deltas = [rip_constant_exact(mat, k).delta_k for k in (1, 2, 3)]
    ok = all(deltas[i] <= deltas[i + 1] + 1e-12 for i in range(2))
    return CheckResult("rip_monotone", ok, f"deltas {deltas}")


def _check_bpdn_certificate() -> CheckResult:
    rng = np.random.default_rng(105)
    ok = True
    detail = []
    for _ in range(5):
        mat = rng.standard_normal((16, 20)) + 1j * rng.standard_normal((16, 20))
        mat /= np.linalg.norm(mat, axis=0, keepdims=True)
        delta = rip_constant_exact(mat, 4).delta_k
        if delta >= math.sqrt(2) - 1:
            continue
        c1 = bpdn_stability_constant(delta)
        h = np.zeros(20, dtype=complex)
        h[rng.choice(20, 2, replace=False)] = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        noise = rng.standard_normal(16) + 1j * rng.standard_normal(16)
        noise *= 1e-3 / np.linalg.norm(noise)
        eps = 1e-3
        rec = bpdn(DenseOperator(mat), mat @ h + noise, eps, h_true=h)
        ok &= rec.d_norm <= c1 * eps
        detail.append(f"{rec.d_norm:.2e}<=+{c1 * eps:.2e}")
    return CheckResult("bpdn_error_certificate", ok, "; ".join(detail))


def _check_throughput_peak() -> CheckResult:
    b = 4
    grid = np.linspace(0.0, 5 * b, 401)
    vals = [aloha_throughput(x, b, 1.0, 1.0) for x in grid]
    peak = grid[int(np.argmax(vals))]
    anchor = abs(aloha_throughput(1.0, 1, 1.0, 1.0) - math.exp(-1.0)) <= 1e-12
    ok = abs(peak - b) <= (grid[1] - grid[0]) / 2 + 1e-12 and anchor
    return CheckResult("throughput_peak", ok, f"argmax {peak} vs slots {b}")


def _check_corollary() -> CheckResult:
    ok = True
    worst = -math.inf
    for fading in (FadingModel.from_taps(1), FadingModel.from_taps(4)):
        for alpha in np.linspace(0.0, 1.0, 6):
            lhs, rhs = pilot_split_rate_gap(float(alpha), fading, samples=10 ** 4)
            worst = max(worst, lhs - rhs)
            ok &= lhs <= rhs + 1e-6
    return CheckResult("corollary_inequality", ok, f"max lhs-rhs {worst:.3e}")


def _check_cr_divergence() -> CheckResult:
    val = margin_tail_integral(0.5, FadingModel.from_taps(2), cutoff_delta=0.0)
    return CheckResult("tail_integral_divergence_flag", math.isinf(val),
                       f"cutoff->0 value {val}")


def validate(verbose: bool = False) -> list[CheckResult]:
    """Oracle-equivalence suite; all checks must pass on a fresh checkout."""
    checks = [
        _check_fft_convolution(),
        _check_operator_dense(),
        _check_adjoint(),
        _check_rip_monotone(),
        _check_bpdn_certificate(),
        _check_throughput_peak(),
        _check_corollary(),
        _check_cr_divergence(),
    ]
    if verbose:
        for c in checks:
            print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.detail}")
    return checks
