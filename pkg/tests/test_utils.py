import hashlib
import json

import pytest

from utils.config_manager import OUTPUT_ROOT_ENV, ConfigManager
from utils.error_handler import (EXIT_CONFIGURATION, EXIT_NUMERICAL, EXIT_SUCCESS, EXIT_UNEXPECTED,
                                 ConfigurationError, DataError, ErrorHandler, NumericalError)
from utils.file_manager import FileManager


class TestConfigManager:
    def test_user_file_merges_into_defaults(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"schema_version": 1, "window": {"t_in": 20}}), encoding='utf-8')
        cm = ConfigManager(str(path))
        assert cm.get_setting('window.t_in') == 20
        assert cm.get_setting('window.t_out') == 25

    def test_overrides_win_over_file(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"schema_version": 1, "seed": 3}), encoding='utf-8')
        cm = ConfigManager(str(path), {'seed': 8, 'eval.dual': True})
        assert cm.get_setting('seed') == 8 and cm.get_setting('eval.dual') is True

    def test_output_root_from_environment(self, monkeypatch):
        monkeypatch.setenv(OUTPUT_ROOT_ENV, "/tmp/elsewhere")
        assert ConfigManager().get_setting('output_dir') == "/tmp/elsewhere"

    def test_bad_schema_version_names_the_file(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text('{"schema_version": 7}', encoding='utf-8')
        with pytest.raises(ConfigurationError) as err:
            ConfigManager(str(path))
        assert err.value.path == str(path)
        assert str(path) in str(err.value)

    def test_invalid_json_rejected(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text('{"schema_version": ', encoding='utf-8')
        with pytest.raises(ConfigurationError):
            ConfigManager(str(path))

    def test_split_ratios_validated(self):
        cm = ConfigManager(overrides={'split.train': 0.9})
        with pytest.raises(ConfigurationError):
            cm.validate_config()

    def test_missing_required_setting(self):
        with pytest.raises(ConfigurationError):
            ConfigManager().require_setting('checkpoint')


class TestErrorHandler:
    def test_exit_codes_by_error_kind(self, tmp_path):
        handler = ErrorHandler(str(tmp_path))

        def failing(error):
            @handler.with_error_handling("probe")
            def run():
                if error:
                    raise error
            return run()

        assert failing(None) == EXIT_SUCCESS
        assert failing(ConfigurationError("bad")) == EXIT_CONFIGURATION
        assert failing(NumericalError("nan")) == EXIT_NUMERICAL
        assert failing(RuntimeError("boom")) == EXIT_UNEXPECTED

        history = json.loads((tmp_path / "error_analysis.json").read_text(encoding='utf-8'))
        assert [e['exit_code'] for e in history['recent_errors']] == [2, 4, 1]
        assert history['stats']['ConfigurationError']['count'] == 1

    def test_data_error_is_a_value_error(self):
        with pytest.raises(ValueError):
            raise DataError("x", path="a/b")


def test_directory_hashes_ignore_names(tmp_path):
    (tmp_path / "a.txt").write_text("1", encoding='utf-8')
    (tmp_path / "run_config.json").write_text("{}", encoding='utf-8')
    hashes = FileManager.get_directory_hashes(str(tmp_path), ignore=["run_config.json"])
    assert list(hashes) == ["a.txt"]


def test_file_hash_is_sha256(tmp_path):
    path = tmp_path / "blob.bin"
    path.write_bytes(b"motion" * 20000)
    assert FileManager.calculate_file_hash(str(path)) == hashlib.sha256(b"motion" * 20000).hexdigest()
