import numpy as np
import pytest

from watercge.calibrate import calibration_report, write_calibration_report
from watercge.core.model import Model, fd_jacobian
from watercge.errors import ContractError, InvariantError
from watercge.solve import SolverConfig, solve


def test_square_in_both_mobility_settings(model_a, model_b):
    for cm in (model_a, model_b):
        assert cm.model.system.m == cm.model.system.n == len(cm.model.layout)
    users = model_a.sets.users_of("WAT")
    # fixed water carries one price per user; mobile water a single market price
    assert model_a.model.n - model_b.model.n == len(users) - 1
    assert ("WFM", "WAT") in model_b.model.layout and ("WFM", "WAT") not in model_a.model.layout
    assert all(("WFS", "WAT", i) in model_a.model.layout for i in users)
    assert model_a.sets.is_mobile("LAB") and model_b.sets.is_mobile("LAB")
    assert not model_a.sets.is_mobile("KAP")


def test_benchmark_residual_is_zero(model_a, model_b):
    for cm in (model_a, model_b):
        assert np.abs(cm.model.residual(cm.state)).max() <= 1e-8
        assert abs(cm.state[("WALRAS",)]) <= 1e-7


def test_jacobian_sparsity_matches_incidence(model_b):
    x = model_b.state.x
    J = model_b.model.jacobian(x)
    structure = model_b.model.system.incidence_matrix()
    assert not np.any((J != 0) & ~structure.astype(bool))


def test_fd_jacobian_on_a_known_function():
    def f(x):
        return np.array([x[0] ** 2 * x[1], np.sin(x[1]) + x[0]])
    x = np.array([1.5, 0.3])
    exact = np.array([[2 * 1.5 * 0.3, 1.5**2], [1.0, np.cos(0.3)]])
    assert np.allclose(fd_jacobian(f, x), exact, atol=1e-7)


def test_perturbed_start_returns_to_benchmark(model_a):
    x0 = model_a.state.x
    rng = np.random.default_rng(3)
    start = x0 * np.exp(rng.uniform(-0.05, 0.05, x0.size))
    st, rep = solve(model_a.model, start)
    assert rep.converged and rep.iterations < 20
    nz = np.abs(x0) > 0
    assert np.max(np.abs(st.x[nz] - x0[nz]) / np.abs(x0[nz])) <= 1e-6


def test_fd_and_analytic_solves_agree(model_b):
    x0 = model_b.state.x * 1.01
    a, _ = solve(model_b.model, x0, SolverConfig(jacobian="analytic"))
    f, _ = solve(model_b.model, x0, SolverConfig(jacobian="fd"))
    assert np.allclose(a.x, f.x, rtol=1e-7, atol=1e-9)


def test_with_exogenous_keeps_scaling(model_b):
    m2 = model_b.model.with_exogenous(model_b.exo.with_(cpi_target=1.0))
    assert np.array_equal(m2.system.scale, model_b.model.system.scale)
    assert np.array_equal(m2.residual(model_b.state), model_b.model.residual(model_b.state))


def test_missing_parameter_is_a_contract_error(model_b):
    exo = model_b.exo.with_(pwm={})
    with pytest.raises(ContractError):
        Model(model_b.sets, model_b.params, exo)


def test_unknown_jacobian_mode(model_b):
    with pytest.raises(ContractError):
        model_b.model.jacobian(model_b.state, "secant")


def test_invariant_error_is_an_assertion():
    assert issubclass(InvariantError, AssertionError)


def test_calibration_report(model_b, tmp_path):
    rows = calibration_report(model_b)
    assert rows and all(r["residual"] <= 1e-8 for r in rows if "residual" in r)
    write_calibration_report(model_b, tmp_path / "cal.csv")
    assert (tmp_path / "cal.csv").read_text().count("\n") == len(rows) + 1
