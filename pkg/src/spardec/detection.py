"""Activity scoring and active-set detection.

The activity of component ``i`` given the current estimate ``s_hat`` is

    g_i = | a_i^T (x - A s_hat) + s_hat_i |

which equals ``|s_hat_i|`` whenever ``s_hat`` is feasible (``A s_hat = x``)
and reduces to the matched-filter response ``|a_i^T x|`` at the zero
initial estimate. Components whose activity clears a threshold are
declared active; a thresholdless variant takes the top-k instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidParamsError
from .problem import SparseProblem

# Built-in decreasing threshold schedules. Names state width/length, not
# provenance: the short 6-step schedule suits highly sparse mixtures, the
# 10-step one is a general default, the 13-step one starts higher and ends
# lower for regimes where activity separates slowly.
SCHEDULE_PRESETS: dict[str, tuple[float, ...]] = {
    "exp1_short": (0.3, 0.2, 0.1, 0.05, 0.02, 0.01),
    "general_10": (0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1, 0.07, 0.05, 0.02),
    "wide_13": (0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1, 0.07,
                0.05, 0.02, 0.01),
}


@dataclass(frozen=True)
class ThresholdSchedule:
    """Decreasing sequence of detection thresholds, one per iteration.

    Values must be positive, non-increasing, and below ``k_scale`` (the
    activity scale of a unit l-infinity source; leave at 1 unless inputs
    are deliberately unnormalized).
    """

    values: tuple[float, ...]
    k_scale: float = 1.0

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if len(vals) == 0:
            raise InvalidParamsError("schedule must have at least one value")
        if self.k_scale <= 0:
            raise InvalidParamsError(f"k_scale must be > 0, got {self.k_scale}")
        for v in vals:
            if not v > 0:
                raise InvalidParamsError(f"thresholds must be > 0, got {v}")
            if not v < self.k_scale:
                raise InvalidParamsError(
                    f"thresholds must be < k_scale={self.k_scale}, got {v}")
        if any(b > a for a, b in zip(vals, vals[1:])):
            raise InvalidParamsError(
                f"thresholds must be non-increasing, got {vals}")
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.values)

    @classmethod
    def preset(cls, name: str) -> "ThresholdSchedule":
        if name not in SCHEDULE_PRESETS:
            raise InvalidParamsError(
                f"unknown schedule {name!r}; choose from "
                f"{sorted(SCHEDULE_PRESETS)}")
        return cls(SCHEDULE_PRESETS[name])


@dataclass(frozen=True)
class ActiveSetPartition:
    """Disjoint active/inactive index sets covering ``range(m)``."""

    active: np.ndarray
    inactive: np.ndarray
    m: int

    def __post_init__(self):
        act = np.asarray(self.active, dtype=np.intp)
        inact = np.asarray(self.inactive, dtype=np.intp)
        if act.size + inact.size != self.m:
            raise InvalidParamsError(
                f"partition sizes {act.size}+{inact.size} != m={self.m}")
        if np.any(np.diff(act) <= 0) or np.any(np.diff(inact) <= 0):
            raise InvalidParamsError("index sets must be strictly increasing")
        # increasing order makes the ends the extremes, so bounds plus a
        # one-pass coverage check replace a sort
        for idx in (act, inact):
            if idx.size and (idx[0] < 0 or idx[-1] >= self.m):
                raise InvalidParamsError(
                    f"indices must lie in [0, {self.m}), got "
                    f"[{idx[0]}, {idx[-1]}]")
        flags = np.zeros(self.m, dtype=bool)
        flags[act] = True
        if flags[inact].any():
            raise InvalidParamsError(
                "active/inactive must partition range(m) exactly")
        flags[inact] = True
        if not flags.all():
            raise InvalidParamsError(
                "active/inactive must partition range(m) exactly")
        act.setflags(write=False)
        inact.setflags(write=False)
        object.__setattr__(self, "active", act)
        object.__setattr__(self, "inactive", inact)

    @property
    def k_alpha(self) -> int:
        return int(self.active.size)

    @property
    def k_iota(self) -> int:
        return int(self.inactive.size)

    @classmethod
    def from_mask(cls, active_mask: np.ndarray) -> "ActiveSetPartition":
        mask = np.asarray(active_mask, dtype=bool)
        return cls(active=np.flatnonzero(mask),
                   inactive=np.flatnonzero(~mask),
                   m=mask.size)


def activity(problem: SparseProblem, estimate: np.ndarray) -> np.ndarray:
    """Activity scores ``|A^T (x - A s_hat) + s_hat|`` for every component."""
    s_hat = np.asarray(estimate, dtype=float)
    if s_hat.shape != (problem.m,):
        raise InvalidParamsError(
            f"estimate must have shape ({problem.m},), got {s_hat.shape}")
    a = problem.dictionary.entries
    residual = problem.mixture - a @ s_hat
    return np.abs(a.T @ residual + s_hat)


def detect(g: np.ndarray, epsilon: float) -> ActiveSetPartition:
    """Partition components by activity strictly above ``epsilon``."""
    g = np.asarray(g, dtype=float)
    if g.ndim != 1:
        raise InvalidParamsError(f"activity must be 1-D, got ndim={g.ndim}")
    if not epsilon > 0:
        raise InvalidParamsError(f"epsilon must be > 0, got {epsilon}")
    return ActiveSetPartition.from_mask(g > epsilon)


def detect_topk(g: np.ndarray, k: int) -> ActiveSetPartition:
    """Thresholdless detection: the ``k`` highest-activity components are
    active, ties broken toward the lower index."""
    g = np.asarray(g, dtype=float)
    if g.ndim != 1:
        raise InvalidParamsError(f"activity must be 1-D, got ndim={g.ndim}")
    if not 0 <= k <= g.size:
        raise InvalidParamsError(
            f"k must lie in [0, {g.size}], got {k}")
    order = np.argsort(-g, kind="stable")
    mask = np.zeros(g.size, dtype=bool)
    mask[order[:k]] = True
    return ActiveSetPartition.from_mask(mask)


def cap_active(partition: ActiveSetPartition, g: np.ndarray,
               cap: int) -> ActiveSetPartition:
    """Shrink an oversized active set to its ``cap`` highest-activity
    members (ties toward the lower index). No-op when already within cap."""
    if cap < 0:
        raise InvalidParamsError(f"cap must be >= 0, got {cap}")
    if partition.k_alpha <= cap:
        return partition
    g = np.asarray(g, dtype=float)
    if g.shape != (partition.m,):
        raise InvalidParamsError(
            f"activity must have shape ({partition.m},), got {g.shape}")
    act = partition.active
    order = np.argsort(-g[act], kind="stable")
    keep = act[order[:cap]]
    mask = np.zeros(partition.m, dtype=bool)
    mask[keep] = True
    return ActiveSetPartition.from_mask(mask)
