import numpy as np
import pytest

from watercge.errors import IterationLimitError, SingularJacobianError, SolverError
from watercge.solve import SolverConfig, _name, newton_solve, solve


def _sqrt2():
    return (lambda x: np.array([x[0] ** 2 - 2.0]), lambda x: np.array([[2 * x[0]]]))


def test_scalar_root():
    f, j = _sqrt2()
    rep = newton_solve(f, j, [1.0])
    assert rep.converged
    assert abs(rep.x[0] ** 2 - 2.0) <= 1e-8
    assert len(rep.trace) == rep.iterations


def test_iterates_respect_floor():
    f, j = _sqrt2()
    rep = newton_solve(f, j, [0.01], x_min=[1e-9])
    assert rep.converged and rep.x[0] > 0


def test_two_dimensional_system():
    def f(x):
        return np.array([x[0] * x[1] - 6.0, x[0] + x[1] - 5.0])

    def j(x):
        return np.array([[x[1], x[0]], [1.0, 1.0]])

    rep = newton_solve(f, j, [1.0, 4.5])
    assert rep.converged
    assert np.allclose(sorted(rep.x), [2.0, 3.0])


def test_singular_jacobian_is_located():
    def f(x):
        return np.array([x[0] + x[1] - 1.0, 2 * x[0] + 2 * x[1] - 3.0])

    def j(x):
        return np.array([[1.0, 1.0], [2.0, 2.0]])

    with pytest.raises(SingularJacobianError) as err:
        newton_solve(f, j, [0.0, 0.0], equation_names=["budget", "market"], variable_names=["p", "q"])
    rep = err.value.report
    assert rep is not None and not rep.converged
    assert rep.singular[0] in ("budget", "market") and rep.singular[1] in ("p", "q")
    assert rep.fd_refreshes == 1  # one finite-difference retry before giving up
    assert "zero pivot" in rep.summary()


def test_iteration_limit_reports_worst_equation():
    f, j = _sqrt2()
    with pytest.raises(IterationLimitError) as err:
        newton_solve(f, j, [100.0], cfg=SolverConfig(max_iter=2), equation_names=["root"])
    rep = err.value.report
    assert rep.iterations == 2 and rep.worst[0][0] == "root"


def test_non_finite_start_fails_cleanly():
    with pytest.raises(SolverError, match="not finite"):
        newton_solve(lambda x: np.array([np.inf]), lambda x: np.eye(1), [1.0])


def test_no_real_root_fails():
    # x^2 + 1 has no real root; damped Newton stalls at the minimum of |f|
    with pytest.raises(SolverError):
        newton_solve(lambda x: np.array([x[0] ** 2 + 1.0]), lambda x: np.array([[2 * x[0]]]), [0.5],
                     cfg=SolverConfig(max_iter=60))


def test_variable_names():
    assert _name(("QF", "WAT", "POWER")) == "QF[WAT,POWER]"
    assert _name(("EXR",)) == "EXR"


def test_model_solve_reports_names(model_b):
    st, rep = solve(model_b.model, model_b.state)
    assert rep.converged and rep.iterations == 0
    assert st.layout is model_b.model.layout
    assert rep.worst and isinstance(rep.worst[0][0], str)
