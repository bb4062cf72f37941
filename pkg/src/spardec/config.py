"""Experiment configuration: defaults, config files, and CLI overrides.

Config files are plain ``key = value`` text parsed by :mod:`configparser`,
with one section per experiment plus an optional ``[common]`` section that
applies everywhere. Precedence, lowest to highest: built-in defaults,
``[common]``, the experiment's section, then explicit overrides (CLI
flags). Unknown keys are rejected rather than ignored.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, fields, replace

from .detection import SCHEDULE_PRESETS
from .exceptions import ConfigError

EXPERIMENTS = ("exp1", "exp2", "exp3", "exp4", "exp5", "single")
ALGORITHMS = ("ide_s", "ide_x", "mof", "mp", "lp")

# Paper-scale defaults applied on top of the dataclass defaults when a
# config is created for a given experiment.
_EXPERIMENT_DEFAULTS: dict[str, dict] = {
    "exp1": {"m": 1024, "n_ratio": 0.4, "trials": 1,
             "schedule": "exp1_short"},
    "exp2": {"m": 100, "n_ratio": 0.6, "trials": 1000,
             "schedule": "general_10",
             "algorithms": ("ide_s", "ide_x", "lp")},
    "exp3": {"trials": 10, "schedule": "general_10", "sweep_points": 7},
    "exp4": {"m": 1000, "n_ratio": 0.4, "trials": 10,
             "schedule": "general_10", "ratio_points": 25,
             "algorithms": ("ide_s", "ide_x", "lp")},
    "exp5": {"m": 500, "n_ratio": 0.4, "trials": 10,
             "schedule": "general_10", "sigma_points": 10,
             "algorithms": ("ide_s", "ide_x", "lp")},
    "single": {"m": 64, "n_ratio": 0.4, "trials": 1,
               "schedule": "general_10"},
}

# One help line per key, shown by the CLI.
KEY_HELP: dict[str, str] = {
    "experiment": "which run to perform: exp1..exp5 or single",
    "m": "number of sources (columns of the dictionary)",
    "n": "number of mixtures (rows); overrides n_ratio when set",
    "n_ratio": "mixtures as a fraction of sources, n = floor(n_ratio * m)",
    "model": "source model: mog (Gaussian mixture) or exact_k",
    "p0": "mog: prior probability that a source is inactive",
    "sigma0": "mog: inactive standard deviation",
    "sigma1": "mog: active standard deviation",
    "num_active": "exact_k: number of active sources",
    "inactive_sigma": "exact_k: standard deviation of inactive sources",
    "schedule": "threshold schedule preset name, or comma-separated values",
    "algorithms": "comma-separated subset of ide_s,ide_x,mof,mp,lp",
    "trials": "number of trials (exp2: time samples) per point",
    "seed": "base seed; trial t at sweep point p uses seed + 1000*p + t",
    "mp_iterations": "iteration counts reported for matching pursuit",
    "output_dir": "directory for CSV and .dat output",
    "scale": "scales m and trials downward for quick runs (0 < scale <= 1)",
    "threads": "worker threads for independent trials (exp3 forces 1)",
    "problem_file": "single: solve this .sdp file instead of generating",
    "ratio_points": "exp4: number of #act/(n/2) points in [0.1, 1]",
    "ratios": "exp4: explicit comma-separated ratio list (overrides "
              "ratio_points)",
    "sigma_points": "exp5: number of dictionary-noise levels in "
                    "[0.001, 0.1]",
    "sigmas": "exp5: explicit comma-separated noise levels (overrides "
              "sigma_points)",
    "noise_model": "exp5: dictionary noise reading, variance or std",
    "sweep_points": "exp3: number of log-spaced dimension points in "
                    "[10, 1000]",
    "cases": "exp2: semicolon-separated m,n_ratio pairs, e.g. "
             "'100,0.6; 500,0.4'",
}


@dataclass
class ExperimentConfig:
    """Resolved parameters for one experiment run.

    ``n`` may be left unset, in which case it is derived from ``n_ratio``
    after ``scale`` is applied to ``m``. ``trials`` doubles as the number
    of time samples in exp2.
    """

    experiment: str = "single"
    m: int = 64
    n: int | None = None
    n_ratio: float = 0.4
    model: str = "mog"
    p0: float = 0.9
    sigma0: float = 0.01
    sigma1: float = 1.0
    num_active: int | None = None
    inactive_sigma: float = 0.01
    schedule: str = "general_10"
    algorithms: tuple[str, ...] = ("ide_s", "ide_x", "mof", "mp", "lp")
    trials: int = 1
    seed: int = 0
    mp_iterations: tuple[int, ...] = (10, 100, 1000)
    output_dir: str = "results"
    scale: float = 1.0
    threads: int = 1
    problem_file: str | None = None
    ratio_points: int = 25
    ratios: tuple[float, ...] | None = None
    sigma_points: int = 10
    sigmas: tuple[float, ...] | None = None
    noise_model: str = "std"
    sweep_points: int = 7
    cases: tuple[tuple[int, float], ...] = ((100, 0.6), (500, 0.4))

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(
                f"experiment must be one of {EXPERIMENTS}, "
                f"got {self.experiment!r}")
        if not 0 < self.scale <= 1:
            raise ConfigError(f"scale must be in (0, 1], got {self.scale}")
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")
        if self.model not in ("mog", "exact_k"):
            raise ConfigError(
                f"model must be 'mog' or 'exact_k', got {self.model!r}")
        bad = [a for a in self.algorithms if a not in ALGORITHMS]
        if bad:
            raise ConfigError(
                f"unknown algorithms {bad}; choose from {ALGORITHMS}")
        if not self.algorithms:
            raise ConfigError("algorithms must not be empty")
        if self.seed < 0:
            raise ConfigError(f"seed must be >= 0, got {self.seed}")

    # -- resolution -------------------------------------------------------

    @property
    def effective_m(self) -> int:
        return max(8, int(round(self.m * self.scale)))

    @property
    def effective_n(self) -> int:
        if self.n is not None:
            n = int(round(self.n * self.scale)) if self.scale != 1.0 \
                else self.n
        else:
            n = int(self.n_ratio * self.effective_m)
        return max(2, n)

    @property
    def effective_trials(self) -> int:
        return max(1, int(round(self.trials * self.scale)))

    def check_dimensions(self) -> None:
        if not self.effective_n < self.effective_m:
            raise ConfigError(
                f"need n < m after resolution, got n={self.effective_n}, "
                f"m={self.effective_m}")

    def trial_seed(self, point: int, trial: int) -> int:
        """Derived seed for one trial of one sweep point."""
        return self.seed + 1000 * point + trial


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _parse_floats(text: str) -> tuple[float, ...]:
    parts = [p for p in text.replace(",", " ").split() if p]
    try:
        return tuple(float(p) for p in parts)
    except ValueError as exc:
        raise ConfigError(f"expected numbers, got {text!r}") from exc


def _parse_ints(text: str) -> tuple[int, ...]:
    parts = [p for p in text.replace(",", " ").split() if p]
    try:
        return tuple(int(p) for p in parts)
    except ValueError as exc:
        raise ConfigError(f"expected integers, got {text!r}") from exc


def _parse_cases(text: str) -> tuple[tuple[int, float], ...]:
    cases = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = [p for p in chunk.replace(",", " ").split() if p]
        if len(parts) != 2:
            raise ConfigError(
                f"expected 'm,n_ratio' pairs separated by ';', got {text!r}")
        try:
            cases.append((int(parts[0]), float(parts[1])))
        except ValueError as exc:
            raise ConfigError(f"bad case {chunk!r}") from exc
    if not cases:
        raise ConfigError(f"no cases in {text!r}")
    return tuple(cases)


def parse_schedule_arg(text: str):
    """A schedule argument: preset name, or comma-separated values."""
    from .detection import ThresholdSchedule
    from .exceptions import InvalidParamsError

    text = text.strip()
    if text in SCHEDULE_PRESETS:
        return text
    try:
        values = _parse_floats(text)
    except ConfigError:
        raise ConfigError(
            f"unknown schedule {text!r}; presets: "
            f"{sorted(SCHEDULE_PRESETS)}") from None
    if not values:
        raise ConfigError("schedule value list is empty")
    try:
        ThresholdSchedule(values)
    except InvalidParamsError as exc:
        raise ConfigError(f"bad schedule: {exc}") from exc
    return values


_PARSERS = {
    "experiment": str,
    "m": int,
    "n": int,
    "n_ratio": float,
    "model": str,
    "p0": float,
    "sigma0": float,
    "sigma1": float,
    "num_active": int,
    "inactive_sigma": float,
    "schedule": parse_schedule_arg,
    "algorithms": lambda t: tuple(
        p for p in t.replace(",", " ").split() if p),
    "trials": int,
    "seed": int,
    "mp_iterations": _parse_ints,
    "output_dir": str,
    "scale": float,
    "threads": int,
    "problem_file": str,
    "ratio_points": int,
    "ratios": _parse_floats,
    "sigma_points": int,
    "sigmas": _parse_floats,
    "noise_model": str,
    "sweep_points": int,
    "cases": _parse_cases,
}

_FIELD_NAMES = {f.name for f in fields(ExperimentConfig)}
assert set(_PARSERS) == _FIELD_NAMES


def default_config(experiment: str) -> ExperimentConfig:
    """Built-in defaults for one experiment."""
    if experiment not in EXPERIMENTS:
        raise ConfigError(
            f"experiment must be one of {EXPERIMENTS}, got {experiment!r}")
    return ExperimentConfig(experiment=experiment,
                            **_EXPERIMENT_DEFAULTS[experiment])


def load_config(path: str, experiment: str) -> ExperimentConfig:
    """Defaults for ``experiment`` updated from a config file."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"bad config {path}: {exc}") from exc
    updates: dict = {}
    for section in ("common", experiment):
        if not parser.has_section(section):
            continue
        for key, raw in parser.items(section):
            if key == "experiment":
                raise ConfigError(
                    f"{path}: the experiment is chosen on the command "
                    f"line, not in the file")
            if key not in _PARSERS:
                raise ConfigError(f"{path}: unknown key {key!r} in "
                                  f"[{section}]")
            try:
                updates[key] = _PARSERS[key](raw)
            except ConfigError:
                raise
            except Exception as exc:
                raise ConfigError(
                    f"{path}: bad value for {key!r}: {raw!r}") from exc
    return apply_overrides(default_config(experiment), **updates)


def apply_overrides(config: ExperimentConfig, **overrides) -> ExperimentConfig:
    """A copy of ``config`` with non-None overrides applied."""
    updates = {k: v for k, v in overrides.items() if v is not None}
    unknown = set(updates) - _FIELD_NAMES
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    if not updates:
        return config
    return replace(config, **updates)
