"""Configuration defaults, file parsing, and overrides."""

import pytest

from spardec.config import (
    EXPERIMENTS,
    ExperimentConfig,
    apply_overrides,
    default_config,
    load_config,
    parse_schedule_arg,
)
from spardec.exceptions import ConfigError


def test_defaults_per_experiment():
    c1 = default_config("exp1")
    assert c1.m == 1024 and c1.n_ratio == 0.4
    assert c1.schedule == "exp1_short"
    c4 = default_config("exp4")
    assert c4.m == 1000 and c4.ratio_points == 25
    assert "mof" not in c4.algorithms
    with pytest.raises(ConfigError):
        default_config("exp9")


def test_all_experiments_resolve():
    for name in EXPERIMENTS:
        cfg = default_config(name)
        cfg.check_dimensions()
        assert cfg.effective_n < cfg.effective_m


def test_effective_scaling():
    cfg = ExperimentConfig(experiment="exp1", m=1024, trials=10, scale=0.5)
    assert cfg.effective_m == 512
    assert cfg.effective_n == int(0.4 * 512)
    assert cfg.effective_trials == 5
    tiny = ExperimentConfig(m=10, scale=0.1)
    assert tiny.effective_m == 8   # floor
    assert tiny.effective_n == 3   # 0.4 of the floored m
    assert ExperimentConfig(m=10, n_ratio=0.1, scale=0.1).effective_n == 2


def test_explicit_n_overrides_ratio():
    cfg = ExperimentConfig(m=100, n=37)
    assert cfg.effective_n == 37
    scaled = ExperimentConfig(m=100, n=37, scale=0.5)
    assert scaled.effective_n == round(37 * 0.5)


def test_check_dimensions_rejects_flat():
    cfg = ExperimentConfig(m=64, n=64)
    with pytest.raises(ConfigError):
        cfg.check_dimensions()


def test_trial_seed_is_affine():
    cfg = ExperimentConfig(seed=7)
    assert cfg.trial_seed(0, 0) == 7
    assert cfg.trial_seed(3, 41) == 7 + 3000 + 41
    # distinct (point, trial) pairs within range never collide
    seen = {cfg.trial_seed(p, t) for p in range(5) for t in range(1000)}
    assert len(seen) == 5000


def test_validation_errors():
    with pytest.raises(ConfigError):
        ExperimentConfig(experiment="nope")
    with pytest.raises(ConfigError):
        ExperimentConfig(scale=0.0)
    with pytest.raises(ConfigError):
        ExperimentConfig(trials=0)
    with pytest.raises(ConfigError):
        ExperimentConfig(model="laplace")
    with pytest.raises(ConfigError):
        ExperimentConfig(algorithms=("ide_s", "omp"))
    with pytest.raises(ConfigError):
        ExperimentConfig(algorithms=())
    with pytest.raises(ConfigError):
        ExperimentConfig(seed=-1)


def test_parse_schedule_arg():
    assert parse_schedule_arg("general_10") == "general_10"
    assert parse_schedule_arg("0.3, 0.1, 0.05") == (0.3, 0.1, 0.05)
    with pytest.raises(ConfigError):
        parse_schedule_arg("fancy_schedule")
    with pytest.raises(ConfigError):
        parse_schedule_arg("0.1, 0.3")  # must decrease
    with pytest.raises(ConfigError):
        parse_schedule_arg("")


def test_apply_overrides():
    base = default_config("exp5")
    out = apply_overrides(base, m=200, sigmas=(0.0, 0.1), seed=None)
    assert out.m == 200 and out.sigmas == (0.0, 0.1)
    assert out.seed == base.seed  # None means keep
    assert base.m == 500          # original untouched
    with pytest.raises(ConfigError):
        apply_overrides(base, granularity=3)


def test_load_config_precedence(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(
        "[common]\n"
        "seed = 11\n"
        "trials = 4\n"
        "[exp5]\n"
        "trials = 6\n"
        "sigmas = 0.0 0.05 0.1\n")
    cfg = load_config(str(path), "exp5")
    assert cfg.seed == 11
    assert cfg.trials == 6  # experiment section beats [common]
    assert cfg.sigmas == (0.0, 0.05, 0.1)
    other = load_config(str(path), "exp4")
    assert other.trials == 4  # only [common] applies


def test_load_config_rejections(tmp_path):
    missing = tmp_path / "nope.cfg"
    with pytest.raises(ConfigError):
        load_config(str(missing), "exp1")
    bad_key = tmp_path / "bad_key.cfg"
    bad_key.write_text("[exp1]\nwavelets = 3\n")
    with pytest.raises(ConfigError):
        load_config(str(bad_key), "exp1")
    bad_value = tmp_path / "bad_value.cfg"
    bad_value.write_text("[exp1]\ntrials = soon\n")
    with pytest.raises(ConfigError):
        load_config(str(bad_value), "exp1")
    pinned = tmp_path / "pinned.cfg"
    pinned.write_text("[exp1]\nexperiment = exp2\n")
    with pytest.raises(ConfigError):
        load_config(str(pinned), "exp1")


def test_load_config_schedule_values(tmp_path):
    path = tmp_path / "sched.cfg"
    path.write_text("[single]\nschedule = 0.2, 0.1, 0.02\n")
    cfg = load_config(str(path), "single")
    assert cfg.schedule == (0.2, 0.1, 0.02)
