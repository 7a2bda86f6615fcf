import pytest

from core.config import CALIBRATED_STIFFNESS, RunConfig, load_config, read_key_values
from core.exceptions import (
    EXIT_FATAL,
    EXIT_USAGE,
    BatchError,
    ConfigError,
    GridFormatError,
    NoFreeVoxelError,
    UnknownFormatError,
)


def write(tmp_path, text):
    path = tmp_path / "run.conf"
    path.write_text(text)
    return path


def test_defaults():
    config = load_config()
    assert config.field.k == CALIBRATED_STIFFNESS == 0.003
    assert config.unit == 0.08
    assert config.threads == 1
    assert config.window.rate == 10.0


def test_key_value_lines():
    text = "# header\nthreads = 2  # trailing\n\n[field]\nk = 0.01\n"
    assert read_key_values(text) == [(None, "threads", "2", 2), ("field", "k", "0.01", 5)]


@pytest.mark.parametrize("text, line", [("[ ]\n", 1), ("a = 1\nnothing here\n", 2), ("= 4\n", 1)])
def test_malformed_lines(text, line):
    with pytest.raises(ConfigError) as info:
        read_key_values(text, "run.conf")
    assert info.value.line == line
    assert info.value.details["path"] == "run.conf"


def test_file_with_sections(tmp_path):
    config = load_config(write(tmp_path, "threads = 4\nseed = 9\n[field]\nk = 0.01\n"))
    assert config.threads == 4 and config.seed == 9
    assert config.field.k == 0.01


def test_overrides_win_over_file(tmp_path):
    config = load_config(write(tmp_path, "threads = 4\nseed = 9\n"), {"threads": 2, "seed": None})
    assert config.threads == 2
    assert config.seed == 9


@pytest.mark.parametrize(
    "text, line",
    [
        ("threads = 1\nthreads = 2\n", 2),
        ("seed = 1\nthreads = 0\n", 2),
        ("seed = 1\n\nbogus = 1\n", 3),
        ("[field]\nk = 0.1\nbogus = 2\n", 3),
        ("field = 3\n[field]\nk = 1\n", 3),
    ],
)
def test_config_errors_report_lines(tmp_path, text, line):
    with pytest.raises(ConfigError) as info:
        load_config(write(tmp_path, text))
    assert info.value.line == line
    assert info.value.exit_code == EXIT_USAGE


def test_unreadable_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.conf")


def test_environment(monkeypatch):
    monkeypatch.setenv("OCCU_THREADS", "3")
    monkeypatch.setenv("OCCU_FIELD__K", "0.02")
    config = load_config()
    assert config.threads == 3
    assert config.field.k == 0.02


def test_unknown_keyword_is_rejected():
    with pytest.raises(Exception):
        RunConfig(speed=3)


def test_exception_reports():
    error = UnknownFormatError("stl", ["ply", "obj", "json"])
    report = error.to_dict()["error"]
    assert report["code"] == "UNKNOWN_FORMAT"
    assert report["exit_code"] == EXIT_USAGE
    assert report["details"]["supported"] == ["json", "obj", "ply"]
    assert error.exit_code == EXIT_USAGE


def test_exit_codes():
    assert GridFormatError("bad", "g.mobg").exit_code == EXIT_FATAL
    assert NoFreeVoxelError().exit_code == EXIT_FATAL
    batch = BatchError(3, 3)
    assert batch.exit_code == EXIT_FATAL
    assert batch.details == {"failed": 3, "total": 3}
