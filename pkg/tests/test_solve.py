from fractions import Fraction

import pytest

from invqsar.milp.model import BINARY, CONTINUOUS, GE, LE, MAX, MILPModel
from invqsar.milp.solve import (
    ExternalBackend,
    SolutionCheckError,
    SolverFailure,
    Solution,
    default_external_backend,
    parse_solution_text,
    solve,
)


def small_model():
    m = MILPModel()
    m.add_var("x", BINARY)
    m.add_var("y", CONTINUOUS, 0, 2)
    m.add_constr("c1", {"x": 1, "y": 1}, LE, 2.5)
    m.set_objective(MAX, {"x": 1, "y": 1})
    return m


def test_external_backend_round_trip():
    sol = solve(small_model(), default_external_backend(60))
    assert sol.status == "optimal"
    assert abs(sol.objective - 2.5) < 1e-6
    assert sol.int_value("x") == 1


def test_mini_backend():
    sol = solve(small_model(), "mini")
    assert sol.status == "optimal"
    assert abs(sol.objective - 2.5) < 1e-9


def test_infeasible_is_status_not_error():
    m = MILPModel()
    m.add_var("x", CONTINUOUS, 0, 1)
    m.add_constr("a", {"x": 1}, GE, 2)
    for backend in ("mini", default_external_backend(60)):
        assert solve(m, backend).status == "infeasible"


def test_parse_cbc_style():
    text = (
        "Optimal - objective value 12.5\n"
        "0 x 1 0\n"
        "1 y 0.5 0\n"
    )
    sol = parse_solution_text(text)
    assert sol.status == "optimal"
    assert sol.objective == 12.5
    assert sol.values["y"] == Fraction(1, 2)


def test_parse_name_value_style():
    text = (
        "# Objective value = 3\n"
        "x 1\n"
        "y 2.25\n"
    )
    sol = parse_solution_text(text)
    assert sol.status == "optimal"
    assert sol.objective == 3.0
    assert sol.values["x"] == 1
    assert sol.values["y"] == Fraction(9, 4)


def test_parse_infeasible_header():
    sol = parse_solution_text("Infeasible - objective value 0\n")
    assert sol.status == "infeasible"


def test_bad_solution_file():
    with pytest.raises(SolverFailure):
        parse_solution_text("")
    with pytest.raises(SolverFailure):
        parse_solution_text("x 1 2 3 4 5\n")


def test_command_template_failure():
    backend = ExternalBackend("false {input} {output}", timeout=10)
    with pytest.raises(SolverFailure):
        solve(small_model(), backend)


def test_command_timeout():
    backend = ExternalBackend('sh -c "sleep 30; cp {input} {output}"', timeout=0.3)
    with pytest.raises(SolverFailure, match="exceeded"):
        solve(small_model(), backend)


def test_lying_solver_caught():
    """A solver that claims feasibility with wrong values must be rejected."""
    backend = ExternalBackend(
        'sh -c "printf \'Optimal - objective value 99\\n0 x 7 0\\n1 y 0 0\\n\' > {output}"',
        timeout=10,
    )
    with pytest.raises(SolutionCheckError):
        solve(small_model(), backend)


def test_missing_values_default_to_zero():
    m = MILPModel()
    m.add_var("x", CONTINUOUS, 0, 1)
    m.add_var("slackish", CONTINUOUS, 0, 1)
    m.add_constr("c", {"x": 1}, LE, 1)
    backend = ExternalBackend(
        'sh -c "printf \'Optimal - objective value 0\\n0 x 0 0\\n\' > {output}"',
        timeout=10,
    )
    sol = solve(m, backend)
    assert sol.values["slackish"] == 0
