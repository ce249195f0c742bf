import pytest

from pottscolor.annealing import SaConfig
from pottscolor.config import (
    ConfigError, build, check_keys, coerce, format_resolved, parse_config_text, parse_list, resolve_seed,
)
from pottscolor.model import ArchSpec
from pottscolor.training import TrainConfig


def test_parse_text():
    text = "# comment\nepochs = 3\nlearning-rate=0.01  # trailing\n\nmanifest = a/b.txt\n"
    assert parse_config_text(text) == {"epochs": "3", "learning_rate": "0.01", "manifest": "a/b.txt"}
    with pytest.raises(ConfigError):
        parse_config_text("no equals sign")
    with pytest.raises(ConfigError):
        parse_config_text(" = 3")


def test_build_coerces_types():
    cfg = build(TrainConfig, {"epochs": "3", "learning_rate": "0.01", "warmup_epochs_eta1": "none",
                              "normalize_entropy": "yes"})
    assert cfg.epochs == 3 and cfg.learning_rate == 0.01
    assert cfg.warmup_epochs_eta1 is None and cfg.normalize_entropy is True
    arch = build(ArchSpec, {"mlp_hidden": "4,5,6", "aggregation": "mean"}, q=3, input_dim=4)
    assert arch.mlp_hidden == (4, 5, 6) and arch.q == 3


def test_build_errors():
    with pytest.raises(ConfigError):
        build(TrainConfig, {"epochs": "many"})
    with pytest.raises(ConfigError):
        build(SaConfig, {"schedule": "cosine"})
    with pytest.raises(ConfigError):
        coerce("maybe", bool)


def test_check_keys():
    check_keys({"a": 1}, {"a", "b"})
    with pytest.raises(ConfigError, match="zzz"):
        check_keys({"zzz": 1}, {"a"})


def test_parse_list_and_format():
    assert parse_list("1, 2;3,,") == ["1", "2", "3"]
    assert format_resolved({"a": (1, 2), "b": None}) == "a = 1,2\nb = None"


def test_resolve_seed(monkeypatch):
    monkeypatch.delenv("POTTSCOLOR_SEED", raising=False)
    assert resolve_seed(None) == 0 and resolve_seed(5) == 5
    monkeypatch.setenv("POTTSCOLOR_SEED", "17")
    assert resolve_seed(None) == 17 and resolve_seed(2) == 2
    monkeypatch.setenv("POTTSCOLOR_SEED", "x")
    with pytest.raises(ConfigError):
        resolve_seed(None)
