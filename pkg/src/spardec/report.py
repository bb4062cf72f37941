"""Per-iteration traces and solve reports shared by all algorithms."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class IterationTrace:
    """Snapshot of one iteration of an iterative solver.

    ``epsilon`` is the detection threshold where one applies (NaN for the
    thresholdless variant, None for algorithms without thresholds);
    ``spatial_snr_db`` is present only when the problem carries its truth.
    ``estimate`` is stored only when the caller asks for per-iteration
    estimates, to keep long runs cheap.
    """

    iteration: int
    k_alpha: int
    residual_rel: float
    elapsed_seconds: float
    epsilon: float | None = None
    spatial_snr_db: float | None = None
    estimate: np.ndarray | None = None


@dataclass
class SolveReport:
    """Outcome of one solver run on one problem instance."""

    algorithm: str
    estimate: np.ndarray
    traces: list[IterationTrace] = field(default_factory=list)
    total_seconds: float = 0.0
    warnings: list[str] = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.traces)

    @property
    def k_alpha_final(self) -> int:
        return self.traces[-1].k_alpha if self.traces else 0
