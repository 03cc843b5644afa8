import pytest

from config import DEFAULT_DATA_DIR, RunConfig


def test_defaults(monkeypatch):
    for name in ("XLK_SEED", "XLK_TOL", "XLK_FORMAT", "XLK_COUNT"):
        monkeypatch.delenv(name, raising=False)
    cfg = RunConfig()
    assert cfg.seed == 42
    assert cfg.tol == 1e-10
    assert cfg.count == 5
    assert cfg.output_format == "text"
    assert cfg.data_dir == DEFAULT_DATA_DIR
    assert not cfg.json_output


def test_environment_values(monkeypatch):
    monkeypatch.setenv("XLK_SEED", "7")
    monkeypatch.setenv("XLK_FORMAT", "JSON")
    cfg = RunConfig()
    assert cfg.seed == 7
    assert cfg.json_output


@pytest.mark.parametrize("overrides", [
    {"seed": "abc"},
    {"seed": -1},
    {"count": 0},
    {"tol": 0},
    {"output_format": "yaml"},
    {"log_level": "loud"},
    {"min_gap": 1e7},
])
def test_invalid_values(overrides):
    with pytest.raises(ValueError):
        RunConfig(**overrides)


def test_overrides_skip_missing_values():
    cfg = RunConfig().with_overrides(seed=9, count=None, output_format="json")
    assert cfg.seed == 9
    assert cfg.count == RunConfig().count
    assert cfg.json_output


def test_tolerances():
    assert set(RunConfig().tolerances()) == {"residual", "rank_cutoff", "gap_ratio", "min_gap", "step"}


def test_environment_strings_are_parsed(monkeypatch, tmp_path):
    monkeypatch.setenv("XLK_SEED", "11")
    monkeypatch.setenv("XLK_TOL", "1e-9")
    monkeypatch.setenv("XLK_COUNT", "3")
    monkeypatch.setenv("XLK_DATA_DIR", str(tmp_path))
    cfg = RunConfig()
    assert type(cfg.seed) is int and cfg.seed == 11
    assert type(cfg.count) is int and cfg.count == 3
    for name in ("tol", "rank_cutoff", "gap_ratio", "min_gap", "step"):
        assert type(getattr(cfg, name)) is float
    assert cfg.tol == 1e-9
    assert cfg.data_dir == tmp_path
    assert RunConfig(output=str(tmp_path / "r.json")).output == tmp_path / "r.json"
