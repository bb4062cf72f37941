"""Recovery-quality metrics and timing.

SNR here is a power ratio reported both linear and in dB
(``db = 10 log10(linear)``). Exact recovery yields an explicitly infinite
measurement rather than a large stand-in number; undefined per-source
ratios (zero-energy reference) yield a NaN sentinel.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .exceptions import (
    DimensionMismatchError,
    ZeroMixtureError,
    ZeroTruthError,
)
from .problem import SourceVector, SparseProblem


@dataclass(frozen=True)
class SnrMeasurement:
    """A power ratio, kept as both linear value and decibels."""

    linear: float
    db: float

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.linear)

    @property
    def is_undefined(self) -> bool:
        return math.isnan(self.linear)

    @classmethod
    def from_power_ratio(cls, signal_power: float,
                         error_power: float) -> "SnrMeasurement":
        if signal_power <= 0 or not math.isfinite(signal_power):
            raise ZeroTruthError(
                f"signal power must be positive and finite, got {signal_power}")
        if error_power < 0:
            raise ValueError(f"error power must be >= 0, got {error_power}")
        if error_power == 0:
            return cls(linear=math.inf, db=math.inf)
        ratio = signal_power / error_power
        return cls(linear=ratio, db=10.0 * math.log10(ratio))

    @classmethod
    def undefined(cls) -> "SnrMeasurement":
        return cls(linear=math.nan, db=math.nan)


def _vector(v) -> np.ndarray:
    if isinstance(v, SourceVector):
        return v.values
    return np.asarray(v, dtype=float)


def spatial_snr(truth, estimate) -> SnrMeasurement:
    """SNR of one estimated source vector: ``||s||^2 / ||s - s_hat||^2``.

    Raises ``ZeroTruthError`` for an identically zero reference.
    """
    s = _vector(truth)
    s_hat = _vector(estimate)
    if s.shape != s_hat.shape:
        raise DimensionMismatchError(
            f"truth shape {s.shape} != estimate shape {s_hat.shape}")
    signal = float(np.dot(s, s))
    if signal == 0.0:
        raise ZeroTruthError("spatial SNR of a zero source is undefined")
    err = s - s_hat
    return SnrMeasurement.from_power_ratio(signal, float(np.dot(err, err)))


def temporal_snr(truth_series: np.ndarray,
                 estimate_series: np.ndarray) -> list[SnrMeasurement]:
    """Per-source SNR across a batch of samples.

    Both inputs are ``(m, N)``: one column per sample. Source ``i`` gets
    ``sum_t s_i(t)^2 / sum_t (s_i(t) - s_hat_i(t))^2``. A source with zero
    energy across the batch yields the NaN sentinel at its index instead
    of failing the whole measurement.
    """
    s = np.asarray(truth_series, dtype=float)
    s_hat = np.asarray(estimate_series, dtype=float)
    if s.ndim != 2 or s_hat.shape != s.shape:
        raise DimensionMismatchError(
            f"expected matching (m, N) arrays, got {s.shape} and {s_hat.shape}")
    signal = np.einsum("it,it->i", s, s)
    err = s - s_hat
    noise = np.einsum("it,it->i", err, err)
    out = []
    for sig_i, err_i in zip(signal, noise):
        if sig_i == 0.0:
            out.append(SnrMeasurement.undefined())
        else:
            out.append(SnrMeasurement.from_power_ratio(float(sig_i),
                                                       float(err_i)))
    return out


def relative_approx_error(problem: SparseProblem, estimate) -> float:
    """``||x - A s_hat|| / ||x||`` for one estimate."""
    s_hat = _vector(estimate)
    if s_hat.shape[0] != problem.m:
        raise DimensionMismatchError(
            f"estimate length {s_hat.shape[0]} != m={problem.m}")
    x_norm = float(np.linalg.norm(problem.mixture))
    if x_norm == 0.0:
        raise ZeroMixtureError("relative error against a zero mixture")
    resid = problem.mixture - problem.dictionary.entries @ s_hat
    return float(np.linalg.norm(resid)) / x_norm


def frobenius_snr(reference: np.ndarray, perturbed: np.ndarray) -> SnrMeasurement:
    """Frobenius-norm SNR between a matrix and its perturbation."""
    a = np.asarray(reference, dtype=float)
    b = np.asarray(perturbed, dtype=float)
    if a.shape != b.shape:
        raise DimensionMismatchError(
            f"matrix shapes differ: {a.shape} vs {b.shape}")
    signal = float(np.sum(a * a))
    if signal == 0.0:
        raise ZeroTruthError("Frobenius SNR of a zero matrix is undefined")
    diff = a - b
    return SnrMeasurement.from_power_ratio(signal, float(np.sum(diff * diff)))


def stopwatch(thunk):
    """Run ``thunk()`` and return ``(result, elapsed_seconds)`` measured on
    the monotonic clock."""
    start = time.perf_counter()
    result = thunk()
    return result, time.perf_counter() - start
