"""Config parsing, defaults, overrides, and hashing."""

import pytest

from hoseq.config import Config, load_config
from hoseq.errors import UsageError


def write(tmp_path, text):
    path = tmp_path / "cfg.ini"
    path.write_text(text)
    return path


def test_defaults_fill_missing_keys(tmp_path):
    cfg = load_config(write(tmp_path, "[deployment]\nn_bs = 7\n"))
    assert cfg.get("deployment", "n_bs") == 7
    assert cfg.get("deployment", "n_sectors") == 3
    assert cfg.get("radio", "path_loss_exponent") == 3.1
    assert cfg.get("suite", "seeds") == [1, 2, 3]


def test_unknown_section_and_key_rejected(tmp_path):
    with pytest.raises(UsageError):
        load_config(write(tmp_path, "[nope]\nx = 1\n"))
    with pytest.raises(UsageError):
        load_config(write(tmp_path, "[deployment]\nbogus = 1\n"))


def test_override_applies_and_validates(tmp_path):
    path = write(tmp_path, "[deployment]\nn_bs = 7\n")
    cfg = load_config(path, ["deployment.n_bs=9", "suite.n_values=2,4"])
    assert cfg.get("deployment", "n_bs") == 9
    assert cfg.get("suite", "n_values") == [2, 4]
    with pytest.raises(UsageError):
        load_config(path, ["deployment.nope=1"])
    with pytest.raises(UsageError):
        load_config(path, ["no-equals-sign"])


def test_bad_value_rejected_at_load_with_key_context(tmp_path):
    with pytest.raises(UsageError) as err:
        load_config(write(tmp_path, "[deployment]\nn_bs = many\n"))
    assert "deployment.n_bs" in str(err.value)


def test_hash_stable_and_sensitive(tmp_path):
    a = load_config(write(tmp_path, "[deployment]\nn_bs = 7\n"))
    b = Config(values={"deployment": {"n_bs": "7"}})
    assert a.hash() == b.hash()
    c = load_config(write(tmp_path, "[deployment]\nn_bs = 8\n"))
    assert a.hash() != c.hash()


def test_section_hash_ignores_other_sections(tmp_path):
    a = load_config(write(tmp_path, "[deployment]\nn_bs = 7\n[train]\nepisodes = 5\n"))
    b = load_config(write(tmp_path, "[deployment]\nn_bs = 7\n[train]\nepisodes = 9\n"))
    scenario = ("deployment", "area", "radio", "mobility", "a3")
    assert a.hash(scenario) == b.hash(scenario)
    assert a.hash() != b.hash()
