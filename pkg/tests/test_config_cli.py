from dataclasses import fields

import pytest

from expertrec.harness.cli import main
from expertrec.harness.config import (AGENTS, SECTIONS, ConfigError, ExperimentConfig, apply_overrides,
                                      load_config, to_ini)


def test_sections_cover_every_field_once():
    keys = [k for ks in SECTIONS.values() for k in ks]
    assert sorted(keys) == sorted(f.name for f in fields(ExperimentConfig))
    assert len(keys) == len(set(keys))


def test_full_scale_profile_values():
    c = load_config(profile="paper")
    assert (c.n_topics, c.catalog_size, c.corpus_size, c.slate_size) == (8, 100_000, 5, 2)
    assert (c.n_experts, c.trajectories_per_expert, c.max_steps) == (10, 100, 20)
    assert (c.gamma, c.irl_iterations, c.th1, c.th2, c.sessions) == (0.5, 10_000, 0.5, 0.1, 3000)
    assert c.agents == AGENTS


def test_desk_profile_values():
    c = load_config(profile="desk")
    assert (c.catalog_size, c.irl_iterations, c.sessions) == (10_000, 2000, 500)


def test_ini_round_trip(tmp_path):
    c = apply_overrides(ExperimentConfig(), {"seed": "9", "agents": "febr,recnaive", "th1": "0.25",
                                             "nearest": "true"})
    (tmp_path / "c.ini").write_text(to_ini(c))
    assert load_config(tmp_path / "c.ini") == c


def test_overrides_win_over_file(tmp_path):
    (tmp_path / "c.ini").write_text("[experiment]\nseed = 5\n")
    assert load_config(tmp_path / "c.ini", overrides={"seed": "6"}).seed == 6


@pytest.mark.parametrize("text", ["[nope]\nseed = 1\n", "[irl]\nseed = 1\n", "[irl]\ngamma = x\n",
                                  "[irl]\ngamma = 1.5\n", "[experiment]\nagents = febr,other\n",
                                  "[catalog]\nslate_size = 9\n", "not an ini"])
def test_bad_files_are_config_errors(tmp_path, text):
    (tmp_path / "c.ini").write_text(text)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "c.ini")


def test_unknown_profile_and_key():
    with pytest.raises(ConfigError):
        load_config(profile="huge")
    with pytest.raises(ConfigError):
        load_config(overrides={"bogus": "1"})


def test_digest_tracks_values():
    assert ExperimentConfig().digest() != ExperimentConfig(seed=1).digest()


TINY = ["--set", "catalog_size=2000", "--set", "n_experts=2", "--set", "trajectories_per_expert=5",
        "--set", "irl_iterations=20", "--set", "sessions=4", "--set", "user_budget=20"]


def test_cli_exit_codes(tmp_path, capsys):
    out = ["--out-dir", str(tmp_path)]
    assert main(["train-irl", *out]) == 3
    assert main(["gen-catalog", *out, "--set", "gamma=2"]) == 2
    assert main(["gen-catalog", *out, "--set", "oops"]) == 2
    assert main(["gen-catalog", *out, "--config", str(tmp_path / "missing.ini")]) == 2
    assert main(["report", *out]) == 3
    (tmp_path / "catalog.csv").write_text("garbage\n")
    assert main(["gen-trajectories", *out, *TINY]) == 4
    err = capsys.readouterr().err
    assert "gen-trajectories" in err and "missing artifact" in err


def test_cli_stages_then_simulate_and_report(tmp_path):
    out = ["--out-dir", str(tmp_path), "--seed", "3", *TINY]
    for verb in ("gen-catalog", "gen-trajectories", "train-irl", "build-dataset"):
        assert main([verb, *out]) == 0, verb
    assert main(["simulate", "--agent", "febr", *out]) == 0
    assert main(["simulate", "--agent", "recnaive", *out]) == 0
    assert main(["report", *out]) == 0
    for name in ("catalog.csv", "catalog_evaluated.csv", "experts.json", "trajectories.csv", "irl_model.txt",
                 "irl_trace.csv", "dataset.csv", "metrics_febr.csv", "sessions_recnaive.csv", "qt_by_arm.csv",
                 "summary.txt", "config.ini"):
        assert (tmp_path / name).exists(), name
    assert "seed = 3" in (tmp_path / "config.ini").read_text()
    # artifacts built for 8 topics do not fit a 4-topic configuration
    assert main(["simulate", "--agent", "febr", *out, "--set", "n_topics=4"]) == 2
