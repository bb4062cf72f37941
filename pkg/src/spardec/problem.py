"""Problem model: dictionaries, source vectors, and mixture instances.

An instance of the recovery problem is ``x = A s`` with ``A`` an ``n x m``
dictionary of unit-norm columns (``m > n``), ``s`` a sparse source vector,
and ``x`` the observed mixture. Generators here produce the two source
models used throughout (Gaussian mixture and exact-k), random spherical
dictionaries, and noisy dictionary perturbations. All randomness flows
through ``numpy.random.default_rng(seed)`` so every artifact is
reproducible from its seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    DimensionMismatchError,
    InvalidParamsError,
    SdpFormatError,
)

_MODEL_TAGS = ("mog", "exact_k", "external")


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype, order="C", copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Dictionary:
    """Unit-column dictionary ``A`` with more columns than rows.

    Attributes
    ----------
    entries : ndarray, shape (n, m)
        The matrix itself; read-only once constructed.
    """

    entries: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.entries, dtype=float)
        if arr.ndim != 2:
            raise InvalidParamsError(f"dictionary must be 2-D, got ndim={arr.ndim}")
        n, m = arr.shape
        if m <= n:
            raise InvalidParamsError(
                f"dictionary must be underdetermined (m > n), got n={n}, m={m}")
        norms = np.linalg.norm(arr, axis=0)
        if norms.size and np.max(np.abs(norms - 1.0)) > 1e-12:
            worst = int(np.argmax(np.abs(norms - 1.0)))
            raise InvalidParamsError(
                f"dictionary columns must be unit norm; column {worst} "
                f"has norm {norms[worst]:.17g}")
        object.__setattr__(self, "entries", _frozen_array(arr))

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def m(self) -> int:
        return self.entries.shape[1]


@dataclass(frozen=True)
class SourceVector:
    """Length-m source vector with a tag recording how it was produced."""

    values: np.ndarray
    model_tag: str = "external"

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != 1:
            raise InvalidParamsError(f"source must be 1-D, got ndim={arr.ndim}")
        if self.model_tag not in _MODEL_TAGS:
            raise InvalidParamsError(
                f"model_tag must be one of {_MODEL_TAGS}, got {self.model_tag!r}")
        object.__setattr__(self, "values", _frozen_array(arr))

    @property
    def m(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class MogParams:
    """Two-component Gaussian mixture: with probability ``p0`` a component
    is drawn from the narrow N(0, sigma0^2), otherwise from N(0, sigma1^2).
    ``p0`` close to 1 makes the source sparse."""

    p0: float = 0.9
    sigma0: float = 0.01
    sigma1: float = 1.0

    def __post_init__(self):
        if not 0.5 < self.p0 < 1.0:
            raise InvalidParamsError(f"p0 must lie in (0.5, 1), got {self.p0}")
        if not 0.0 < self.sigma0 < self.sigma1:
            raise InvalidParamsError(
                f"need 0 < sigma0 < sigma1, got sigma0={self.sigma0}, "
                f"sigma1={self.sigma1}")


@dataclass(frozen=True)
class ExactKParams:
    """Exactly ``num_active`` components set to 1 before normalization;
    the rest drawn from N(0, inactive_sigma^2)."""

    num_active: int
    inactive_sigma: float = 0.01

    def __post_init__(self):
        if self.num_active < 1:
            raise InvalidParamsError(
                f"num_active must be >= 1, got {self.num_active}")
        if self.inactive_sigma < 0:
            raise InvalidParamsError(
                f"inactive_sigma must be >= 0, got {self.inactive_sigma}")


@dataclass(frozen=True)
class SparseProblem:
    """One mixture instance, optionally carrying the generating truth."""

    dictionary: Dictionary
    mixture: np.ndarray
    truth: SourceVector | None = None
    seed: int = 0

    def __post_init__(self):
        x = np.asarray(self.mixture, dtype=float)
        if x.ndim != 1:
            raise InvalidParamsError(f"mixture must be 1-D, got ndim={x.ndim}")
        if x.shape[0] != self.dictionary.n:
            raise DimensionMismatchError(
                f"mixture length {x.shape[0]} != dictionary rows "
                f"{self.dictionary.n}")
        if self.seed < 0:
            raise InvalidParamsError(f"seed must be >= 0, got {self.seed}")
        object.__setattr__(self, "mixture", _frozen_array(x))
        if self.truth is not None:
            if self.truth.m != self.dictionary.m:
                raise DimensionMismatchError(
                    f"truth length {self.truth.m} != dictionary columns "
                    f"{self.dictionary.m}")
            resid = np.linalg.norm(
                self.mixture - self.dictionary.entries @ self.truth.values)
            bound = 1e-10 * max(np.linalg.norm(self.mixture), 1e-300)
            if resid > bound:
                raise InvalidParamsError(
                    f"mixture is inconsistent with truth: residual {resid:.3e} "
                    f"exceeds 1e-10 * ||x||")

    @property
    def n(self) -> int:
        return self.dictionary.n

    @property
    def m(self) -> int:
        return self.dictionary.m


def gen_dictionary(n: int, m: int, seed: int) -> Dictionary:
    """Random dictionary with columns uniform on the unit sphere.

    Columns are standard normal draws renormalized to unit 2-norm, which
    is the uniform distribution on the sphere S^{n-1}. A column that draws
    numerically zero norm is redrawn.

    Parameters
    ----------
    n, m : int
        Mixture and source dimensions; requires ``m > n >= 1``.
    seed : int
        RNG seed.
    """
    if n < 1 or m <= n:
        raise InvalidParamsError(f"need m > n >= 1, got n={n}, m={m}")
    rng = np.random.default_rng(seed)
    cols = rng.standard_normal((n, m))
    norms = np.linalg.norm(cols, axis=0)
    while np.any(norms < 1e-12):
        bad = np.flatnonzero(norms < 1e-12)
        cols[:, bad] = rng.standard_normal((n, bad.size))
        norms = np.linalg.norm(cols, axis=0)
    return Dictionary(cols / norms)


def gen_source_mog(m: int, params: MogParams, seed: int) -> SourceVector:
    """Sparse source from the two-component Gaussian mixture model.

    Each component is N(0, sigma0^2) with probability ``p0`` (inactive)
    and N(0, sigma1^2) otherwise (active). The draw is rescaled to unit
    l-infinity norm; an exactly zero draw is regenerated.
    """
    if m < 1:
        raise InvalidParamsError(f"m must be >= 1, got {m}")
    rng = np.random.default_rng(seed)
    while True:
        active = rng.random(m) >= params.p0
        scale = np.where(active, params.sigma1, params.sigma0)
        raw = rng.standard_normal(m) * scale
        peak = np.max(np.abs(raw))
        if peak > 0:
            return SourceVector(raw / peak, model_tag="mog")


def gen_source_exact_k(m: int, params: ExactKParams, seed: int) -> SourceVector:
    """Source with exactly ``num_active`` unit components.

    ``num_active`` positions chosen uniformly without replacement are set
    to 1; the remaining components are N(0, inactive_sigma^2). The vector
    is then rescaled to unit l-infinity norm.
    """
    if m < 1:
        raise InvalidParamsError(f"m must be >= 1, got {m}")
    if params.num_active > m:
        raise InvalidParamsError(
            f"num_active={params.num_active} exceeds m={m}")
    rng = np.random.default_rng(seed)
    values = rng.standard_normal(m) * params.inactive_sigma
    active = rng.choice(m, size=params.num_active, replace=False)
    values[active] = 1.0
    return SourceVector(values / np.max(np.abs(values)), model_tag="exact_k")


def perturb_dictionary(dictionary: Dictionary, sigma_a: float, seed: int,
                       noise_model: str = "variance") -> Dictionary:
    """Additive Gaussian perturbation of a dictionary, columns renormalized.

    The noise level is set relative to the largest entry magnitude
    ``peak = max |a_ij|``: with ``noise_model="variance"`` the per-entry
    noise variance is ``sigma_a * peak``; with ``"std"`` the standard
    deviation is ``sigma_a * peak``. The literature states the former but
    its reported robustness range matches the latter more closely, so the
    model is an explicit switch rather than a constant.
    """
    if sigma_a < 0:
        raise InvalidParamsError(f"sigma_a must be >= 0, got {sigma_a}")
    if noise_model not in ("variance", "std"):
        raise InvalidParamsError(
            f"noise_model must be 'variance' or 'std', got {noise_model!r}")
    rng = np.random.default_rng(seed)
    a = np.array(dictionary.entries, copy=True)
    peak = np.max(np.abs(a))
    level = sigma_a * peak
    std = np.sqrt(level) if noise_model == "variance" else level
    a += rng.standard_normal(a.shape) * std
    norms = np.linalg.norm(a, axis=0)
    while np.any(norms < 1e-12):
        bad = np.flatnonzero(norms < 1e-12)
        a[:, bad] += rng.standard_normal((a.shape[0], bad.size)) * max(std, 1e-6)
        norms = np.linalg.norm(a, axis=0)
    return Dictionary(a / norms)


def make_problem(dictionary: Dictionary, source: SourceVector,
                 seed: int = 0) -> SparseProblem:
    """Assemble ``x = A s`` from a dictionary and a source vector."""
    if source.m != dictionary.m:
        raise DimensionMismatchError(
            f"source length {source.m} != dictionary columns {dictionary.m}")
    mixture = dictionary.entries @ source.values
    return SparseProblem(dictionary=dictionary, mixture=mixture,
                         truth=source, seed=seed)


# ---------------------------------------------------------------------------
# problem files (.sdp)
#
# Line 1:            n m seed
# Following tokens:  A row-major (n*m values), then x (n values), then
#                    optionally s (m values). Whitespace and line breaks are
#                    free-form; values are written with 17 significant digits
#                    so binary64 round-trips exactly. Lines starting with '#'
#                    are comments.
# ---------------------------------------------------------------------------


def save_problem(path, problem: SparseProblem) -> None:
    """Write a problem instance to ``path`` in the .sdp text format."""
    a = problem.dictionary.entries
    lines = [f"{problem.n} {problem.m} {problem.seed}"]
    for row in a:
        lines.append(" ".join(f"{v:.17g}" for v in row))
    lines.append(" ".join(f"{v:.17g}" for v in problem.mixture))
    if problem.truth is not None:
        lines.append(" ".join(f"{v:.17g}" for v in problem.truth.values))
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def load_problem(path) -> SparseProblem:
    """Read a problem instance written by :func:`save_problem`.

    Raises
    ------
    SdpFormatError
        On a malformed header, non-numeric token, or wrong token count;
        the message names the offending line.
    """
    with open(path, "r", encoding="ascii") as fh:
        raw_lines = fh.readlines()

    header = None
    header_lineno = 0
    for lineno, line in enumerate(raw_lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        header = stripped
        header_lineno = lineno
        break
    if header is None:
        raise SdpFormatError(f"{path}: empty file, no header line")
    parts = header.split()
    if len(parts) != 3:
        raise SdpFormatError(
            f"{path}:{header_lineno}: header must be 'n m seed', "
            f"got {len(parts)} fields")
    try:
        n, m, seed = (int(p) for p in parts)
    except ValueError as exc:
        raise SdpFormatError(
            f"{path}:{header_lineno}: non-integer header field: {exc}") from exc
    if n < 1 or m <= n or seed < 0:
        raise SdpFormatError(
            f"{path}:{header_lineno}: header values out of range "
            f"(need m > n >= 1, seed >= 0), got n={n} m={m} seed={seed}")

    values: list[float] = []
    for lineno in range(header_lineno + 1, len(raw_lines) + 1):
        stripped = raw_lines[lineno - 1].strip()
        if not stripped or stripped.startswith("#"):
            continue
        for token in stripped.split():
            try:
                values.append(float(token))
            except ValueError:
                raise SdpFormatError(
                    f"{path}:{lineno}: non-numeric token {token!r}") from None

    base = n * m + n
    if len(values) == base:
        truth_vals = None
    elif len(values) == base + m:
        truth_vals = np.array(values[base:])
    else:
        raise SdpFormatError(
            f"{path}: expected {base} or {base + m} values after the header, "
            f"got {len(values)}")

    a = np.array(values[: n * m]).reshape(n, m)
    x = np.array(values[n * m: base])
    dictionary = Dictionary(a)
    truth = None if truth_vals is None else SourceVector(truth_vals, "external")
    return SparseProblem(dictionary=dictionary, mixture=x, truth=truth,
                         seed=seed)
