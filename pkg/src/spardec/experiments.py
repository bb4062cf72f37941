"""Experiment runners: seeded sweeps, CSV results, plot-ready .dat files.

Every runner takes an :class:`~spardec.config.ExperimentConfig`, executes
its trials (optionally on a thread pool, one derived seed per trial), and
writes all output from the main thread once the workers are done. Output
lands in ``config.output_dir``:

- ``*.csv``: comma-separated with a header row;
- ``*.dat``: two whitespace-separated columns per file, for plotting.

Timing columns are the only nondeterministic fields; rerunning with the
same config and seed reproduces every other byte.
"""

from __future__ import annotations

import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .baselines import MpConfig, lp_solve, mof_solve, mp_solve
from .config import ExperimentConfig
from .detection import ThresholdSchedule
from .exceptions import ConfigError
from .ide import ide_solve
from .metrics import relative_approx_error, spatial_snr, temporal_snr
from .problem import (
    ExactKParams,
    MogParams,
    SparseProblem,
    gen_dictionary,
    gen_source_exact_k,
    gen_source_mog,
    load_problem,
    make_problem,
    perturb_dictionary,
)
from .report import SolveReport

RESULT_HEADER = ("experiment", "algorithm", "trial", "m", "n", "parameter",
                 "snr_db", "k_alpha_final", "residual_rel",
                 "elapsed_seconds")

# seed offsets keeping independent generation streams apart; trial seeds
# advance by config.trial_seed (base + 1000*point + trial)
_DICT_SEED_OFFSET = 500_000
_NOISE_SEED_OFFSET = 750_000


@dataclass
class ResultRow:
    """One algorithm-on-instance outcome, one CSV line."""

    experiment: str
    algorithm: str
    trial: int
    m: int
    n: int
    parameter: str
    snr_db: float | None
    k_alpha_final: int
    residual_rel: float
    elapsed_seconds: float

    def record(self) -> tuple[str, ...]:
        return (self.experiment, self.algorithm, str(self.trial),
                str(self.m), str(self.n), self.parameter,
                _fmt(self.snr_db), str(self.k_alpha_final),
                _fmt(self.residual_rel), _fmt(self.elapsed_seconds))


def _fmt(value) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "n/a"
    v = float(value)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.10g}"


def _ensure_outdir(config: ExperimentConfig) -> str:
    path = config.output_dir
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output dir {path}: {exc}") from exc
    return path


def write_csv(path: str, header, rows) -> None:
    """Plain CSV writer; none of our fields ever contain delimiters."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(str(c) for c in row) + "\n")


def write_dat(path: str, rows, comment: str = "") -> None:
    """Two-column whitespace-separated data file."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        for a, b in rows:
            fh.write(f"{_fmt(a)} {_fmt(b)}\n")


def _resolve_schedule(spec) -> ThresholdSchedule:
    if isinstance(spec, str):
        return ThresholdSchedule.preset(spec)
    return ThresholdSchedule(tuple(spec))


def _schedule_label(spec) -> str:
    return spec if isinstance(spec, str) else "custom"


def _gen_problem(config: ExperimentConfig, m: int, n: int, seed: int,
                 num_active: int | None = None) -> SparseProblem:
    d = gen_dictionary(n, m, seed=seed + _DICT_SEED_OFFSET)
    if config.model == "exact_k":
        k = num_active if num_active is not None else (
            config.num_active if config.num_active is not None
            else max(1, m // 10))
        src = gen_source_exact_k(
            m, ExactKParams(num_active=k,
                            inactive_sigma=config.inactive_sigma),
            seed=seed)
    else:
        src = gen_source_mog(
            m, MogParams(p0=config.p0, sigma0=config.sigma0,
                         sigma1=config.sigma1),
            seed=seed)
    return make_problem(d, src, seed=seed)


def run_algorithm(problem: SparseProblem, algorithm: str,
                  schedule: ThresholdSchedule,
                  mp_max: int = 1000) -> SolveReport:
    """Dispatch one named algorithm on one problem."""
    if algorithm in ("ide_s", "ide_x"):
        return ide_solve(problem, schedule, variant=algorithm)
    if algorithm == "mof":
        return mof_solve(problem)
    if algorithm == "mp":
        return mp_solve(problem, MpConfig(max_iterations=mp_max))
    if algorithm == "lp":
        return lp_solve(problem)
    raise ConfigError(f"unknown algorithm {algorithm!r}")


def _snr_db(problem: SparseProblem, estimate) -> float | None:
    if problem.truth is None:
        return None
    return spatial_snr(problem.truth.values, estimate).db


def _row(config, problem, algorithm, report, trial, parameter) -> ResultRow:
    return ResultRow(
        experiment=config.experiment,
        algorithm=algorithm,
        trial=trial,
        m=problem.m,
        n=problem.n,
        parameter=parameter,
        snr_db=_snr_db(problem, report.estimate),
        k_alpha_final=report.k_alpha_final,
        residual_rel=relative_approx_error(problem, report.estimate),
        elapsed_seconds=report.total_seconds,
    )


def _map_tasks(fn, tasks, threads: int) -> list:
    """Run ``fn`` over ``tasks``, preserving order; the caller writes."""
    if threads <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, tasks))


# ---------------------------------------------------------------------------
# experiment 1: one realization at full scale, every algorithm
# ---------------------------------------------------------------------------

def run_exp1(config: ExperimentConfig) -> list[str]:
    """Single-realization comparison of all algorithms.

    Writes per-iteration traces for the detection variants, a comparison
    table across {mof, mp@counts, lp, ide_s, ide_x}, per-iteration source
    estimate dumps for the first trial, and quality-versus-iterations
    curves for matching pursuit against ide_x.
    """
    config.check_dimensions()
    outdir = _ensure_outdir(config)
    m, n = config.effective_m, config.effective_n
    schedule = _resolve_schedule(config.schedule)
    mp_max = max(config.mp_iterations) if config.mp_iterations else 1000
    trials = config.effective_trials

    def one_trial(trial: int):
        problem = _gen_problem(config, m, n, config.trial_seed(0, trial))
        reports: dict[str, SolveReport] = {}
        rows: list[ResultRow] = []
        for alg in config.algorithms:
            if alg in ("ide_s", "ide_x"):
                rep = ide_solve(problem, schedule, variant=alg,
                                keep_estimates=(trial == 0))
                rows.append(_row(config, problem, alg, rep, trial,
                                 _schedule_label(config.schedule)))
            elif alg == "mp":
                rep = mp_solve(problem, MpConfig(max_iterations=mp_max))
                for count in config.mp_iterations:
                    count = min(count, len(rep.traces))
                    tr = rep.traces[count - 1]
                    rows.append(ResultRow(
                        experiment=config.experiment,
                        algorithm=f"mp_{count}",
                        trial=trial, m=m, n=n, parameter=str(count),
                        snr_db=tr.spatial_snr_db,
                        k_alpha_final=tr.k_alpha,
                        residual_rel=tr.residual_rel,
                        elapsed_seconds=float(sum(
                            t.elapsed_seconds
                            for t in rep.traces[:count])),
                    ))
            else:
                rep = run_algorithm(problem, alg, schedule, mp_max)
                rows.append(_row(config, problem, alg, rep, trial, "n/a"))
            reports[alg] = rep
        return problem, reports, rows

    results = _map_tasks(one_trial, list(range(trials)), config.threads)

    written: list[str] = []
    all_rows = [row for _, _, rows in results for row in rows]
    path = os.path.join(outdir, "exp1_comparison.csv")
    write_csv(path, RESULT_HEADER, [r.record() for r in all_rows])
    written.append(path)

    problem0, reports0, _ = results[0]
    for alg in ("ide_s", "ide_x"):
        if alg not in reports0:
            continue
        rep = reports0[alg]
        path = os.path.join(outdir, f"exp1_trace_{alg}.csv")
        write_csv(path, ("iteration", "k_alpha", "elapsed_seconds",
                         "snr_db"),
                  [(tr.iteration, tr.k_alpha, _fmt(tr.elapsed_seconds),
                    _fmt(tr.spatial_snr_db)) for tr in rep.traces])
        written.append(path)
        for tr in rep.traces:
            if tr.estimate is None:
                continue
            path = os.path.join(
                outdir, f"exp1_sources_{alg}_iter{tr.iteration}.dat")
            write_dat(path, enumerate(tr.estimate),
                      comment=f"{alg} estimate after iteration "
                              f"{tr.iteration}: index value")
            written.append(path)
    if problem0.truth is not None:
        path = os.path.join(outdir, "exp1_sources_truth.dat")
        write_dat(path, enumerate(problem0.truth.values),
                  comment="true sources: index value")
        written.append(path)

    # quality-versus-iterations curves, as relative source error
    def err_curve(rep):
        out = []
        for tr in rep.traces:
            if tr.spatial_snr_db is None:
                continue
            out.append((tr.iteration, 10.0 ** (-tr.spatial_snr_db / 20.0)))
        return out

    if "mp" in reports0:
        path = os.path.join(outdir, "exp1_mp_error.dat")
        write_dat(path, err_curve(reports0["mp"]),
                  comment="matching pursuit: iteration "
                          "relative_source_error")
        written.append(path)
    if "ide_x" in reports0:
        path = os.path.join(outdir, "exp1_ide_x_error.dat")
        write_dat(path, err_curve(reports0["ide_x"]),
                  comment="ide_x: iteration relative_source_error")
        written.append(path)
    return written


# ---------------------------------------------------------------------------
# experiment 2: per-source quality over a batch of time samples
# ---------------------------------------------------------------------------

def run_exp2(config: ExperimentConfig) -> list[str]:
    """Temporal SNR per source over ``trials`` samples, per (m, n/m) case.

    One dictionary per case; every sample shares it and the schedule.
    """
    outdir = _ensure_outdir(config)
    schedule = _resolve_schedule(config.schedule)
    samples = config.effective_trials
    algs = [a for a in config.algorithms if a in ("ide_s", "ide_x", "lp")]
    if not algs:
        raise ConfigError("exp2 needs at least one of ide_s, ide_x, lp")

    written: list[str] = []
    csv_rows: list[tuple] = []
    for case_idx, (m_base, ratio) in enumerate(config.cases):
        m = max(8, int(round(m_base * config.scale)))
        n = max(2, int(ratio * m))
        if not n < m:
            raise ConfigError(f"case {m_base},{ratio}: need n < m")
        d = gen_dictionary(
            n, m, seed=config.seed + _DICT_SEED_OFFSET + case_idx)

        def one_sample(trial: int, m=m, d=d, case_idx=case_idx):
            src = gen_source_mog(
                m, MogParams(p0=config.p0, sigma0=config.sigma0,
                             sigma1=config.sigma1),
                seed=config.trial_seed(case_idx, trial))
            problem = make_problem(d, src, seed=config.seed)
            estimates = {}
            for alg in algs:
                rep = run_algorithm(problem, alg, schedule)
                estimates[alg] = rep.estimate
            return src.values, estimates

        outcomes = _map_tasks(one_sample, list(range(samples)),
                              config.threads)
        truth_mat = np.column_stack([t for t, _ in outcomes])
        for alg in algs:
            est_mat = np.column_stack([e[alg] for _, e in outcomes])
            per_source = temporal_snr(truth_mat, est_mat)
            for idx, meas in enumerate(per_source):
                csv_rows.append((m, n, idx, alg, _fmt(meas.db)))
            path = os.path.join(outdir, f"exp2_m{m}_{alg}.dat")
            write_dat(path,
                      [(idx, meas.db) for idx, meas in
                       enumerate(per_source)],
                      comment=f"m={m} n={n} {alg}: source_index snr_db")
            written.append(path)
    path = os.path.join(outdir, "exp2_temporal.csv")
    write_csv(path, ("m", "n", "source_index", "algorithm", "snr_db"),
              csv_rows)
    written.append(path)
    return written


# ---------------------------------------------------------------------------
# experiment 3: mean runtime versus problem dimension
# ---------------------------------------------------------------------------

def run_exp3(config: ExperimentConfig) -> list[str]:
    """Mean solve time per algorithm over log-spaced problem sizes.

    Timing-sensitive, so trials always run sequentially regardless of the
    configured thread count.
    """
    outdir = _ensure_outdir(config)
    schedule = _resolve_schedule(config.schedule)
    m_values = sorted(set(
        int(round(v)) for v in
        np.geomspace(10, max(10, int(round(1000 * config.scale))),
                     config.sweep_points)))
    trials = config.effective_trials

    rows: list[tuple] = []
    means: dict[str, list[tuple]] = {alg: [] for alg in config.algorithms}
    for point, m in enumerate(m_values):
        n = max(2, int(0.6 * m))
        per_alg: dict[str, list[float]] = {a: [] for a in config.algorithms}
        for trial in range(trials):
            problem = _gen_problem(config, m, n,
                                   config.trial_seed(point, trial))
            for alg in config.algorithms:
                rep = run_algorithm(problem, alg, schedule, mp_max=10)
                per_alg[alg].append(rep.total_seconds)
        for alg in config.algorithms:
            mean_t = float(np.mean(per_alg[alg]))
            rows.append((m, n, alg, _fmt(mean_t)))
            means[alg].append((m, mean_t))

    written = []
    path = os.path.join(outdir, "exp3_times.csv")
    write_csv(path, ("m", "n", "algorithm", "mean_seconds"), rows)
    written.append(path)
    for alg, curve in means.items():
        path = os.path.join(outdir, f"exp3_{alg}.dat")
        write_dat(path, curve, comment=f"{alg}: m mean_seconds")
        written.append(path)
    return written


# ---------------------------------------------------------------------------
# experiment 4: recovery versus sparsity ratio, two schedules
# ---------------------------------------------------------------------------

def run_exp4(config: ExperimentConfig) -> list[str]:
    """Mean SNR against the normalized activity ratio #act/(n/2).

    Detection variants run under both the 10-step and the wide 13-step
    schedule; the l1 solver is schedule-free and recorded once.
    """
    config.check_dimensions()
    outdir = _ensure_outdir(config)
    m, n = config.effective_m, config.effective_n
    trials = config.effective_trials
    if config.ratios is not None:
        ratios = tuple(float(r) for r in config.ratios)
    else:
        ratios = tuple(np.linspace(0.1, 1.0, config.ratio_points))
    for r in ratios:
        if not 0 < r <= 2:
            raise ConfigError(f"ratio {r} out of range")
    schedules = {"general_10": ThresholdSchedule.preset("general_10"),
                 "wide_13": ThresholdSchedule.preset("wide_13")}
    ide_algs = [a for a in config.algorithms if a in ("ide_s", "ide_x")]
    run_lp = "lp" in config.algorithms

    def one_point(point_and_ratio):
        point, ratio = point_and_ratio
        k = max(1, int(round(ratio * n / 2)))
        collected: dict[tuple[str, str], list[float]] = {}
        for trial in range(trials):
            seed = config.trial_seed(point, trial)
            d = gen_dictionary(n, m, seed=seed + _DICT_SEED_OFFSET)
            src = gen_source_exact_k(
                m, ExactKParams(num_active=k,
                                inactive_sigma=config.inactive_sigma),
                seed=seed)
            problem = make_problem(d, src, seed=seed)
            for alg in ide_algs:
                for sname, sched in schedules.items():
                    rep = ide_solve(problem, sched, variant=alg)
                    collected.setdefault((alg, sname), []).append(
                        _snr_db(problem, rep.estimate))
            if run_lp:
                rep = lp_solve(problem)
                collected.setdefault(("lp", "n/a"), []).append(
                    _snr_db(problem, rep.estimate))
        return ratio, {key: float(np.mean(v))
                       for key, v in collected.items()}

    outcomes = _map_tasks(one_point, list(enumerate(ratios)),
                          config.threads)

    rows = []
    curves: dict[tuple[str, str], list[tuple]] = {}
    for ratio, means in outcomes:
        for (alg, sname), mean_snr in sorted(means.items()):
            rows.append((_fmt(ratio), alg, sname, _fmt(mean_snr)))
            curves.setdefault((alg, sname), []).append((ratio, mean_snr))
    written = []
    path = os.path.join(outdir, "exp4_breakdown.csv")
    write_csv(path, ("ratio", "algorithm", "schedule", "mean_snr_db"), rows)
    written.append(path)
    for (alg, sname), curve in curves.items():
        tag = alg if sname == "n/a" else f"{alg}_{sname}"
        path = os.path.join(outdir, f"exp4_{tag}.dat")
        write_dat(path, curve, comment=f"{tag}: ratio mean_snr_db")
        written.append(path)
    return written


# ---------------------------------------------------------------------------
# experiment 5: robustness to dictionary noise
# ---------------------------------------------------------------------------

def run_exp5(config: ExperimentConfig) -> list[str]:
    """Mean source SNR against dictionary SNR under increasing mismatch.

    The mixture comes from the clean dictionary; the solvers only ever see
    the perturbed one, so the solver-side problem carries no truth and the
    harness scores externally.
    """
    config.check_dimensions()
    outdir = _ensure_outdir(config)
    m, n = config.effective_m, config.effective_n
    trials = config.effective_trials
    if config.sigmas is not None:
        sigmas = tuple(float(s) for s in config.sigmas)
    else:
        sigmas = tuple(np.geomspace(0.001, 0.1, config.sigma_points))
    schedule = _resolve_schedule(config.schedule)
    algs = [a for a in config.algorithms if a in ("ide_s", "ide_x", "lp")]
    if not algs:
        raise ConfigError("exp5 needs at least one of ide_s, ide_x, lp")
    k_active = max(1, n // 8)
    # one clean dictionary and source pair for the whole sweep; only the
    # perturbation is redrawn per realization
    d = gen_dictionary(n, m, seed=config.seed + _DICT_SEED_OFFSET)
    src = gen_source_exact_k(
        m, ExactKParams(num_active=k_active,
                        inactive_sigma=config.inactive_sigma),
        seed=config.seed)
    x = d.entries @ src.values
    signal = float(np.sum(d.entries ** 2))

    def one_point(point_and_sigma):
        point, sigma = point_and_sigma
        snr_a_vals = []
        per_alg: dict[str, list[float]] = {a: [] for a in algs}
        for trial in range(trials):
            seed = config.trial_seed(point, trial)
            noisy = perturb_dictionary(d, sigma,
                                       seed=seed + _NOISE_SEED_OFFSET,
                                       noise_model=config.noise_model)
            diff = noisy.entries - d.entries
            noise = float(np.sum(diff ** 2))
            snr_a_vals.append(
                math.inf if noise == 0.0
                else 10.0 * math.log10(signal / noise))
            solver_problem = SparseProblem(dictionary=noisy, mixture=x,
                                           truth=None, seed=seed)
            for alg in algs:
                rep = run_algorithm(solver_problem, alg, schedule)
                per_alg[alg].append(
                    spatial_snr(src.values, rep.estimate).db)
        return (sigma, float(np.mean(snr_a_vals)),
                {a: float(np.mean(v)) for a, v in per_alg.items()})

    outcomes = _map_tasks(one_point, list(enumerate(sigmas)),
                          config.threads)

    rows = []
    curves: dict[str, list[tuple]] = {a: [] for a in algs}
    for sigma, snr_a_db, means in outcomes:
        for alg in algs:
            rows.append((_fmt(sigma), _fmt(snr_a_db), alg,
                         _fmt(means[alg])))
            curves[alg].append((snr_a_db, means[alg]))
    written = []
    path = os.path.join(outdir, "exp5_noise.csv")
    write_csv(path, ("sigma_a", "snr_a_db", "algorithm", "mean_snr_db"),
              rows)
    written.append(path)
    for alg, curve in curves.items():
        path = os.path.join(outdir, f"exp5_{alg}.dat")
        write_dat(path, curve, comment=f"{alg}: snr_a_db mean_snr_db")
        written.append(path)
    return written


# ---------------------------------------------------------------------------
# single instance
# ---------------------------------------------------------------------------

def run_single(config: ExperimentConfig,
               stream=None) -> list[str]:
    """Solve one instance (a .sdp file or a generated problem), print a
    comparison table, and write the same rows as CSV."""
    outdir = _ensure_outdir(config)
    stream = stream if stream is not None else sys.stdout
    if config.problem_file is not None:
        problem = load_problem(config.problem_file)
    else:
        config.check_dimensions()
        problem = _gen_problem(config, config.effective_m,
                               config.effective_n, config.seed)
    schedule = _resolve_schedule(config.schedule)
    mp_max = max(config.mp_iterations) if config.mp_iterations else 1000

    rows = []
    for alg in config.algorithms:
        rep = run_algorithm(problem, alg, schedule, mp_max)
        rows.append(_row(config, problem, alg, rep, 0,
                         _schedule_label(config.schedule)
                         if alg in ("ide_s", "ide_x") else "n/a"))

    header = ("algorithm", "snr_db", "k_alpha", "residual_rel", "seconds")
    table = [(r.algorithm, _fmt(r.snr_db), str(r.k_alpha_final),
              _fmt(r.residual_rel), _fmt(r.elapsed_seconds))
             for r in rows]
    widths = [max(len(h), *(len(t[i]) for t in table))
              for i, h in enumerate(header)]
    line = "  ".join(h.ljust(w) for h, w in zip(header, widths))
    print(line, file=stream)
    print("-" * len(line), file=stream)
    for t in table:
        print("  ".join(c.ljust(w) for c, w in zip(t, widths)),
              file=stream)

    path = os.path.join(outdir, "single_results.csv")
    write_csv(path, RESULT_HEADER, [r.record() for r in rows])
    return [path]


RUNNERS = {
    "exp1": run_exp1,
    "exp2": run_exp2,
    "exp3": run_exp3,
    "exp4": run_exp4,
    "exp5": run_exp5,
    "single": run_single,
}


def run_experiment(config: ExperimentConfig) -> list[str]:
    """Dispatch to the configured experiment; returns written file paths."""
    runner = RUNNERS.get(config.experiment)
    if runner is None:
        raise ConfigError(f"unknown experiment {config.experiment!r}")
    return runner(config)
