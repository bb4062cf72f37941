"""Iterative detection-estimation driver.

Each pass scores component activity under the current estimate, detects an
active set against the iteration's threshold (or takes the top-k), and
re-estimates the sources under the mixture constraint. The s-space variant
keeps every component in play and minimizes inactive energy; the x-space
variant fits the active columns alone and zeroes the rest, which is faster
but commits harder to the detected support.
"""

from __future__ import annotations

import math
import time

import numpy as np

from . import estimation
from .detection import (
    ActiveSetPartition,
    ThresholdSchedule,
    cap_active,
    detect,
    detect_topk,
)
from .exceptions import InvalidParamsError, SingularSystemError
from .metrics import spatial_snr
from .problem import SparseProblem
from .report import IterationTrace, SolveReport

VARIANTS = ("ide_s", "ide_x")
DETECTION_MODES = ("threshold", "topk")


def ide_solve(problem: SparseProblem, schedule: ThresholdSchedule,
              variant: str = "ide_s", detection_mode: str = "threshold",
              s_method: str = "auto", topk: int | None = None,
              scale_thresholds: bool = False, keep_estimates: bool = False,
              cap: int | None = None, max_retries: int = 3) -> SolveReport:
    """Run the full detection-estimation loop on one problem.

    Parameters
    ----------
    problem : SparseProblem
    schedule : ThresholdSchedule
        Thresholds, one iteration per value. In ``topk`` mode only its
        length is used and traces record epsilon as NaN.
    variant : {"ide_s", "ide_x"}
    detection_mode : {"threshold", "topk"}
    s_method : str
        Estimation route for the s-space variant (see
        :func:`spardec.estimation.estimate_s_space`); ``auto`` never
        aborts on an out-of-range active-set size.
    topk : int, optional
        Active-set size in ``topk`` mode; defaults to ``n // 2``.
    scale_thresholds : bool
        Multiply thresholds by ``max |A^T x|`` for unnormalized inputs.
    keep_estimates : bool
        Store a copy of the estimate in every trace row.
    cap : int, optional
        Largest admissible active set; defaults to ``n - 1``. Oversized
        detections are trimmed to the top activities and noted in the
        report warnings.
    max_retries : int
        On a singular estimation system, retry with the active set shrunk
        10% at a time this many times before giving up.

    Returns
    -------
    SolveReport
        Final estimate plus one trace row per iteration.
    """
    if variant not in VARIANTS:
        raise InvalidParamsError(f"variant must be one of {VARIANTS}")
    if detection_mode not in DETECTION_MODES:
        raise InvalidParamsError(
            f"detection_mode must be one of {DETECTION_MODES}")
    n, m = problem.n, problem.m
    if cap is None:
        cap = n - 1
    if topk is None:
        topk = n // 2
    if detection_mode == "topk" and not 0 <= topk <= min(cap, m):
        raise InvalidParamsError(
            f"topk must lie in [0, min(cap, m)] = [0, {min(cap, m)}], "
            f"got {topk}")

    a = problem.dictionary.entries
    x = problem.mixture
    truth = problem.truth.values if problem.truth is not None else None
    scale = 1.0
    if scale_thresholds:
        scale = float(np.max(np.abs(a.T @ x)))
        if scale == 0.0:
            scale = 1.0

    start = time.perf_counter()
    # the frame Gram A A^T is factored once and its per-column solves are
    # memoized across every s-space iteration; see estimate_s_space
    cache = estimation.FrameCache(problem) if variant == "ide_s" else None

    s_hat = np.zeros(m)
    residual = x  # x - A s_hat at the zero initial estimate
    x_norm = float(np.linalg.norm(x))
    traces: list[IterationTrace] = []
    warnings: list[str] = []

    for it, eps_raw in enumerate(schedule.values, start=1):
        t0 = time.perf_counter()
        # activity |A^T (x - A s_hat) + s_hat|, reusing the residual
        # computed when the previous iteration was scored
        g = np.abs(a.T @ residual + s_hat)
        if detection_mode == "threshold":
            eps = eps_raw * scale
            part = detect(g, eps)
        else:
            eps = math.nan
            part = detect_topk(g, topk)
        if part.k_alpha > cap:
            warnings.append(
                f"iteration {it}: active set {part.k_alpha} capped to {cap}")
            part = cap_active(part, g, cap)

        retries = 0
        while True:
            try:
                if variant == "ide_s":
                    s_hat = estimation.estimate_s_space(
                        problem, part, method=s_method, cache=cache)
                else:
                    if part.k_alpha == 0 and np.any(x):
                        warnings.append(
                            f"iteration {it}: empty active set, keeping "
                            f"zero estimate")
                        s_hat = np.zeros(m)
                    else:
                        s_hat = estimation.estimate_x_space(problem, part)
                break
            except SingularSystemError as exc:
                retries += 1
                if retries > max_retries or part.k_alpha <= 1:
                    raise SingularSystemError(
                        f"iteration {it}: estimation still singular after "
                        f"{retries - 1} active-set reductions: {exc}") from exc
                smaller = min(part.k_alpha - 1,
                              int(math.floor(part.k_alpha * 0.9)))
                warnings.append(
                    f"iteration {it}: singular system, retrying with "
                    f"k_alpha={smaller}")
                part = cap_active(part, g, smaller)

        residual = x - a @ s_hat
        resid_norm = float(np.linalg.norm(residual))
        if x_norm == 0.0:
            resid_rel = 0.0 if resid_norm == 0.0 else math.inf
        else:
            resid_rel = resid_norm / x_norm
        snr_db = None
        if truth is not None:
            snr_db = spatial_snr(truth, s_hat).db
        traces.append(IterationTrace(
            iteration=it,
            k_alpha=part.k_alpha,
            residual_rel=resid_rel,
            elapsed_seconds=time.perf_counter() - t0,
            epsilon=eps,
            spatial_snr_db=snr_db,
            estimate=s_hat.copy() if keep_estimates else None,
        ))

    return SolveReport(
        algorithm=variant,
        estimate=s_hat,
        traces=traces,
        total_seconds=time.perf_counter() - start,
        warnings=warnings,
    )
