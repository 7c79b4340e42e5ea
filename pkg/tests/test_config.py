import json

import pytest

from cellmix.config import RunConfig
from cellmix.errors import ConfigError, DomainError


def test_defaults_match_training_settings():
    cfg = RunConfig().validate()
    assert cfg.batch_size == 8 and cfg.image_side == 384 and cfg.trigger_prob == 0.5
    assert cfg.threshold == 4.0 and cfg.mode == "group"
    assert cfg.patch_sizes == [192, 128, 96, 64, 48, 32, 16]
    assert cfg.fix_ratios == [0.9, 0.8, 0.7, 0.6, 0.5]
    cfg.check_side()


def test_load_and_override(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"policy": "back", "threshold": 2.0, "mode": "split"}))
    cfg = RunConfig.load(path)
    assert (cfg.policy, cfg.threshold, cfg.mode) == ("back", 2.0, "split")
    assert cfg.override(threshold=6.0, mode=None).threshold == 6.0


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="bogus"):
        RunConfig.from_dict({"bogus": 1})


def test_nested_rejected():
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"policy": {"kind": "hold"}})


def test_invalid_json(tmp_path):
    path = tmp_path / "c.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        RunConfig.load(path)


@pytest.mark.parametrize(
    "raw", [{"trigger_prob": 2.0}, {"fix_ratios": [0.5, 0.9]}, {"policy": "nope"}, {"mode": "mosaic"}, {"patch_sizes": [8]}]
)
def test_invalid_values(raw):
    with pytest.raises(DomainError):
        RunConfig.from_dict(raw)


def test_side_check():
    with pytest.raises(DomainError):
        RunConfig(image_side=224).check_side()
    with pytest.raises(DomainError):
        RunConfig(policy="fixed-patch:100", patch_sizes=[128, 64]).check_side(256)
