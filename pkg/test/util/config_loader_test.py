import pytest

from app.model.errors import ConfigError
from app.model.experiment_config import Command
from app.util.config_loader import load_config_file, merge_config


def test_missing_path_means_no_values():
    assert load_config_file(None) == {}


def test_loads_mapping(tmp_path):
    path = tmp_path / "grid.yaml"
    path.write_text("n-list: [4, 8]\nt: 0.125\nseed: 3\n", encoding="utf-8")
    assert load_config_file(str(path)) == {"n_list": [4, 8], "t": 0.125, "seed": 3}


def test_empty_file(tmp_path):
    path = tmp_path / "empty.yaml"
    path.write_text("", encoding="utf-8")
    assert load_config_file(str(path)) == {}


@pytest.mark.parametrize("content", ["- 1\n- 2\n", "a: [1\n"])
def test_rejects_malformed_files(tmp_path, content):
    path = tmp_path / "bad.yaml"
    path.write_text(content, encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config_file(str(path))


def test_rejects_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config_file(str(tmp_path / "absent.yaml"))


def test_precedence_flag_over_file_over_default():
    file_values = {"seed": 3, "trials": 7}
    flags = {"seed": 5, "trials": None, "t": None}
    config = merge_config(Command.CHAIN, flags, {"seed": True}, file_values)
    assert config.seed == 5
    assert config.trials == 7
    assert config.t == 0.125


def test_unknown_key_is_a_config_error():
    with pytest.raises(ConfigError, match="budgett"):
        merge_config(Command.MU, {}, {}, {"budgett": 10})
