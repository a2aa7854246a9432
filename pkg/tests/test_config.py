import dataclasses

import pytest

from homeorl.config import (
    DESK_PERTURB_TIME,
    RunConfig,
    parse_config,
    parse_config_text,
    perturb_time_for,
    preset_config,
    serialize_config,
)
from homeorl.errors import ConfigError


def test_empty_file_gives_defaults(tmp_path):
    path = tmp_path / "empty.toml"
    path.write_text("")
    c = parse_config(path)
    assert c == RunConfig()
    assert c.hidden_monolithic == (1024, 1024) and c.hidden_modular == (500, 500)
    assert c.batch_size == 512 and c.buffer_capacity == 30_000 and c.target_period == 200
    assert c.learning_rate == 1e-3 and c.gamma == 0.5
    assert c.depletion == 0.004 and c.setpoints == (5.0,) * 4 and c.initial_stats == (0.5,) * 4
    assert (c.drive_n, c.drive_m) == (4, 2)
    assert c.total_steps == 30_000 and c.delta_window == (15_000, 30_000)
    assert c.anneal_steps == 5000 and c.eps_final == 0.01


def test_comments_and_blank_lines():
    c = parse_config_text("# header\n\ngamma = 0.25  # trailing\nagent_kind = modular\n")
    assert c.gamma == 0.25 and c.agent_kind == "modular"


@pytest.mark.parametrize("bad", ["1.5", "1.0", "-0.1"])
def test_gamma_out_of_range_names_key(bad):
    with pytest.raises(ConfigError, match="gamma"):
        parse_config_text(f"gamma = {bad}\n")


def test_unknown_key_reports_line():
    with pytest.raises(ConfigError, match=r"cfg:3: unknown key 'gama'"):
        parse_config_text("seed = 1\n\ngama = 0.5\n", source="cfg")


def test_duplicate_key_rejected():
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config_text("seed = 1\nseed = 2\n")


@pytest.mark.parametrize(
    "line,key",
    [
        ("batch_size = 0", "batch_size"),
        ("setpoints = [5, 5, 5]", "setpoints"),
        ("setpoints = [5, 5, 0, 5]", "setpoints"),
        ("agent_kind = sarsa", "agent_kind"),
        ("anneal_steps = 0", "anneal_steps"),
        ("delta_window = [100, 50]", "delta_window"),
        ("kernel_covariances = [[[1,0],[0,1]],[[1,0],[0,1]],[[1,0],[0,1]],[[1,2],[2,1]]]", "kernel_covariances"),
    ],
)
def test_invalid_values_name_key(line, key):
    with pytest.raises(ConfigError, match=key):
        parse_config_text(line + "\n")


def test_type_errors_carry_line():
    with pytest.raises(ConfigError, match=r":2: seed"):
        parse_config_text("gamma = 0.5\nseed = \"abc\"\n")


def test_preset_applies_first_regardless_of_position():
    c = parse_config_text("batch_size = 32\npreset = desk\n")
    assert c.preset == "desk" and c.batch_size == 32 and c.hidden_monolithic == (128, 128)


def test_desk_preset_and_perturb_time():
    d = preset_config("desk")
    assert d.total_steps == 12_000 and d.delta_window == (6_000, 12_000)
    assert perturb_time_for(d) == DESK_PERTURB_TIME
    assert perturb_time_for(RunConfig()) == 15_000
    with pytest.raises(ConfigError):
        preset_config("laptop")


@pytest.mark.parametrize("cfg", [RunConfig(), preset_config("desk", gamma=0.9, seed=42, perturb_time=6000)])
def test_serialize_round_trip(cfg):
    assert parse_config_text(serialize_config(cfg)) == cfg


def test_replace_validates():
    with pytest.raises(ConfigError):
        RunConfig().replace(gamma=2.0)
    assert RunConfig().replace(seed=3).seed == 3
    assert [f.name for f in dataclasses.fields(RunConfig)][0] == "n_resources"
