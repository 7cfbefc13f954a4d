from pathlib import Path

import pytest

from src.varexp.core.problem import ProblemSpec, parse_config
from src.varexp.tools.state import GlobalState


def problem_data(kind="reduced_1_2", nodes=33, **sections) -> dict:
    """A minimal problem document; ``sections`` replace or add top-level entries."""
    if kind == "reduced_1_2":
        exponents = {"p0": 3, "alpha": 2}
    else:
        exponents = {"p": "2 + x/2", "xi": 1.5}
    data = {
        "kind": kind,
        "name": "test",
        "grid": {"extents": [[0.0, 1.0]], "nodes": [nodes], "analysis_dimension": 3},
        "exponents": exponents,
        "nonlinearity": {"expression": "0"},
    }
    data.update(sections)
    return data


def build(data: dict, base_dir: Path = Path("."), **overrides) -> ProblemSpec:
    config = parse_config(data, base_dir, data.get("name", "test"))
    return config.with_overrides(**overrides).build()


@pytest.fixture
def settings(tmp_path, monkeypatch):
    """Persisted defaults isolated in a temporary directory."""
    directory = tmp_path / "config"
    monkeypatch.setenv("VAREXP_CONFIG_DIR", str(directory))
    fresh = GlobalState(directory)
    monkeypatch.setattr("src.varexp.tools.artifacts.state", fresh)
    monkeypatch.setattr("src.varexp.cli.state", fresh)
    return fresh
