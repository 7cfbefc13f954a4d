import json
from pathlib import Path

import numpy as np
import pytest
from conftest import build, problem_data
from numpy.testing import assert_allclose

from src.varexp.core.errors import ConfigError
from src.varexp.core.grid import write_grid_csv
from src.varexp.core.problem import ProblemKind, load_config, load_problem, parse_config, write_problem
from src.varexp.core.transform import reduce_problem

PROBLEMS = Path(__file__).resolve().parent.parent / "problems"


def test_bundled_problems_load():
    sine = load_problem(PROBLEMS / "sine.toml")
    assert sine.kind is ProblemKind.REDUCED
    assert sine.p0 == 3.0
    assert sine.config.study_grids == (65, 129, 257, 513)
    main = load_problem(PROBLEMS / "main.toml")
    assert main.is_main
    assert main.manufactured is not None


def test_empty_file(tmp_path):
    path = tmp_path / "empty.toml"
    path.write_text("  \n")
    with pytest.raises(ConfigError, match="empty"):
        load_config(path)


def test_toml_errors_carry_the_position(tmp_path):
    path = tmp_path / "broken.toml"
    path.write_text('kind = "reduced_1_2"\nname = \n')
    with pytest.raises(ConfigError, match="line 2"):
        load_config(path)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.toml")


@pytest.mark.parametrize("change,message", [
    ({"color": "blue"}, "unknown section"),
    ({"kind": "quadratic"}, "kind must be one of"),
    ({"grid": {"nodes": [9]}}, "extents and nodes"),
    ({"exponents": {"p0": 3, "xi": 2}}, "exponents for reduced_1_2"),
    ({"coefficients": {"a0": 1}}, "coefficient names"),
    ({"source": {"f": "x"}}, "single key h"),
    ({"manufactured": {"mode": "discrete"}}, "needs a solution"),
    ({"manufactured": {"solution": "x", "mode": "exact"}}, "manufactured.mode"),
    ({"parameters": {"theta": 1}}, "unknown parameter"),
    ({"parameters": {"eta": 1.5}}, "must lie in"),
])
def test_invalid_documents(change, message):
    with pytest.raises(ConfigError, match=message):
        parse_config(problem_data(**change), Path("."))


def test_reduced_exponent_must_be_constant():
    with pytest.raises(ConfigError, match="constant"):
        build(problem_data(exponents={"p0": "2 + x", "alpha": 2}))


def test_negative_coefficient():
    with pytest.raises(ConfigError, match="nonnegative"):
        build(problem_data(coefficients={"c0": "x - 0.5"}))


def test_nonlinearity_with_unknown_names():
    with pytest.raises(ConfigError, match="nonlinearity"):
        build(problem_data(nonlinearity={"expression": "q*tau"}))


def test_overrides():
    config = parse_config(problem_data(), Path("."))
    assert config.with_overrides(nodes=65, eta=None).nodes == (65,)
    assert config.with_overrides(eta=0.1).eta == 0.1
    with pytest.raises(ConfigError):
        config.with_overrides(eta=0.0)


def test_csv_fields(tmp_path):
    config = parse_config(problem_data(nodes=9), tmp_path)
    grid = config.grid()
    write_grid_csv(tmp_path / "c0.csv", grid, {"value": 1.0 + grid.coordinates[0]})
    spec = parse_config(problem_data(nodes=9, coefficients={"c0": {"csv": "c0.csv"}}), tmp_path).build()
    assert_allclose(spec.coefficient(0).values, 1.0 + grid.coordinates[0])
    with pytest.raises(ConfigError):
        parse_config(problem_data(nodes=17, coefficients={"c0": {"csv": "c0.csv"}}), tmp_path).build()


def test_boundary_values_of_the_manufactured_solution_are_dropped():
    spec = build(problem_data(manufactured={"solution": "1 + x", "mode": "discrete"}))
    assert spec.manufactured.values[0] == 0.0
    assert spec.manufactured.values[-1] == 0.0


def test_written_problem_reloads(tmp_path):
    data = problem_data(
        "main_1_1",
        nonlinearity={"expression": "a1*tau/(1 + abs(tau))"},
        coefficients={"a1": "1 + x"},
        parameters={"p1": 2},
        source={"h": "sin(pi*x)"},
    )
    reduced = reduce_problem(build(data))
    path = write_problem(reduced, tmp_path, stem="reduced")
    document = json.loads(path.read_text())
    assert document["kind"] == "reduced_1_2"
    assert document["exponents"]["p0"] == 2.0
    assert document["exponents"]["alpha"] == {"csv": "reduced.alpha.csv"}
    assert (tmp_path / "reduced.alpha.csv").exists()

    loaded = load_problem(path)
    assert loaded.kind is ProblemKind.REDUCED
    assert_allclose(loaded.growth.values, reduced.growth.values, rtol=1e-15)
    assert_allclose(loaded.source.values, reduced.source.values, rtol=1e-15)
    for k in range(6):
        assert_allclose(loaded.coefficient(k).values, reduced.coefficient(k).values, rtol=1e-15)
    tau = np.linspace(-2.0, 2.0, reduced.grid.size).reshape(reduced.grid.shape)
    assert_allclose(loaded.nonlinearity(tau), reduced.nonlinearity(tau), rtol=1e-14)
    assert loaded.provenance["reduced_from"] == "test"
