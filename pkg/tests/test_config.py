"""Tests for configuration loading and saving."""

import json

import pytest

from conftest import ROOT
from core import config
from core.errors import ConfigError


class TestLoadConfig:

    def test_missing_file_gives_defaults(self, tmp_path):
        cfg = config.load_config(str(tmp_path / 'absent.json'))
        assert cfg == config.DEFAULTS
        cfg['planner']['node_budget'] = 1
        assert config.DEFAULTS['planner']['node_budget'] == 10_000_000

    def test_shipped_file_matches_defaults(self):
        assert config.load_config(str(ROOT / 'config.json')) == config.DEFAULTS

    def test_partial_file_is_completed(self, tmp_path):
        path = tmp_path / 'config.json'
        path.write_text(json.dumps({'simulation': {'trials': 500}}))
        cfg = config.load_config(str(path))
        assert cfg['simulation']['trials'] == 500
        assert cfg['simulation']['seed'] == 2014
        assert cfg['output']['significant_digits'] == 12

    def test_invalid_json(self, tmp_path):
        path = tmp_path / 'config.json'
        path.write_text('{"numerics": ')
        with pytest.raises(ConfigError):
            config.load_config(str(path))

    def test_non_object(self, tmp_path):
        path = tmp_path / 'config.json'
        path.write_text('[1, 2]')
        with pytest.raises(ConfigError):
            config.load_config(str(path))


class TestSaveConfig:

    def test_round_trip(self, tmp_path):
        path = str(tmp_path / 'config.json')
        cfg = config.load_config(path)
        cfg['capacity_search']['restarts'] = 8
        assert config.save_config(cfg, path)
        assert config.load_config(path)['capacity_search']['restarts'] == 8

    def test_unwritable_path(self, tmp_path):
        assert not config.save_config({}, str(tmp_path / 'no' / 'such' / 'dir.json'))
