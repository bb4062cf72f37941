"""Baseline solvers: minimum-energy frame inversion, greedy matching
pursuit, and the minimum-l1 linear program."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidParamsError, SingularSystemError
from .linalg import SpdFactor
from .lp import LpConfig, min_l1
from .metrics import spatial_snr
from .problem import SparseProblem
from .report import IterationTrace, SolveReport


def mof_solve(problem: SparseProblem) -> SolveReport:
    """Minimum 2-norm solution ``A^T (A A^T)^{-1} x``.

    One dense solve; spreads the mixture energy over all components, so
    it recovers no sparsity. Raises :class:`SingularSystemError` when the
    frame Gram ``A A^T`` is numerically singular.
    """
    t0 = time.perf_counter()
    a = problem.dictionary.entries
    try:
        f = SpdFactor(a @ a.T, "frame gram")
    except SingularSystemError as exc:
        raise SingularSystemError(f"frame gram A A^T: {exc}") from exc
    s_hat = a.T @ f.solve(problem.mixture)
    elapsed = time.perf_counter() - t0
    snr_db = None
    if problem.truth is not None:
        snr_db = spatial_snr(problem.truth, s_hat).db
    x_norm = float(np.linalg.norm(problem.mixture))
    resid = float(np.linalg.norm(problem.mixture - a @ s_hat))
    trace = IterationTrace(
        iteration=1, k_alpha=problem.m,
        residual_rel=resid / x_norm if x_norm else 0.0,
        elapsed_seconds=elapsed, spatial_snr_db=snr_db)
    return SolveReport(algorithm="mof", estimate=s_hat, traces=[trace],
                       total_seconds=elapsed)


@dataclass(frozen=True)
class MpConfig:
    """Greedy pursuit settings: a hard step cap plus an optional relative
    residual target (0 keeps iterating to the cap)."""

    max_iterations: int = 1000
    residual_tol: float = 0.0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise InvalidParamsError(
                f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.residual_tol < 0:
            raise InvalidParamsError(
                f"residual_tol must be >= 0, got {self.residual_tol}")


def mp_solve(problem: SparseProblem,
             config: MpConfig = MpConfig()) -> SolveReport:
    """Matching pursuit: repeatedly fit the best-correlated column.

    Each step picks ``argmax_i |a_i^T r|`` over the columns not yet in
    the expansion (ties toward the lower index), stores the correlation
    as that coefficient, and deflates the residual. One new column per
    step, so the support size equals the step count. Every step appends
    a trace row with the support size, relative residual, and SNR when
    the truth is available, so quality-versus-iterations curves come
    from a single run.
    """
    t_start = time.perf_counter()
    a = problem.dictionary.entries
    m = problem.m
    r = np.array(problem.mixture, copy=True)
    coeffs = np.zeros(m)
    used = np.zeros(m, dtype=bool)
    n_used = 0

    x_norm = float(np.linalg.norm(problem.mixture))
    truth = problem.truth.values if problem.truth is not None else None
    if truth is not None:
        signal = float(np.dot(truth, truth))
        err2 = signal  # estimate starts at zero
    traces: list[IterationTrace] = []

    for step in range(1, config.max_iterations + 1):
        t0 = time.perf_counter()
        if n_used == m:
            break  # every column already in the expansion
        corr = a.T @ r
        gain = np.abs(corr)
        gain[used] = -1.0
        i = int(np.argmax(gain))
        alpha = corr[i]
        if alpha == 0.0:
            break  # residual orthogonal to every unused column
        if truth is not None:
            diff_old = truth[i] - coeffs[i]
        coeffs[i] += alpha
        used[i] = True
        n_used += 1
        r -= alpha * a[:, i]

        snr_db = None
        if truth is not None:
            diff_new = diff_old - alpha
            err2 = max(err2 + diff_new * diff_new - diff_old * diff_old, 0.0)
            snr_db = (math.inf if err2 == 0.0
                      else 10.0 * math.log10(signal / err2))
        rel = float(np.linalg.norm(r)) / x_norm if x_norm else 0.0
        traces.append(IterationTrace(
            iteration=step, k_alpha=n_used, residual_rel=rel,
            elapsed_seconds=time.perf_counter() - t0,
            spatial_snr_db=snr_db))
        if rel <= config.residual_tol:
            break

    return SolveReport(algorithm="mp", estimate=coeffs, traces=traces,
                       total_seconds=time.perf_counter() - t_start)


def lp_solve(problem: SparseProblem, config: LpConfig = LpConfig(),
             keep_iterates: bool = False) -> SolveReport:
    """Minimum l1-norm estimate of the sources (see :mod:`spardec.lp`).

    Trace rows mirror the interior-point iterations; their ``k_alpha`` is
    the support size at a 1e-6 relative magnitude cutoff, recorded for
    diagnostics rather than detection.
    """
    t0 = time.perf_counter()
    s_hat, info = min_l1(problem.dictionary.entries, problem.mixture,
                         config=config, keep_iterates=keep_iterates)
    elapsed = time.perf_counter() - t0
    truth = problem.truth.values if problem.truth is not None else None
    traces = []
    for row in info["trace"]:
        est = row.get("estimate")
        snr_db = None
        if est is not None and truth is not None:
            snr_db = spatial_snr(truth, est).db
        traces.append(IterationTrace(
            iteration=row["iteration"], k_alpha=row["support"],
            residual_rel=row["residual_rel"], elapsed_seconds=row["elapsed"],
            spatial_snr_db=snr_db,
            estimate=est))
    return SolveReport(algorithm="lp", estimate=s_hat, traces=traces,
                       total_seconds=elapsed)


def lp_l1_norm(s) -> float:
    """l1 norm of a source vector, the LP objective."""
    arr = np.asarray(s, dtype=float)
    if arr.ndim != 1:
        raise InvalidParamsError(f"expected a vector, got ndim={arr.ndim}")
    return float(np.sum(np.abs(arr)))
