import math
import warnings

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from yode import fields
from yode.errors import (
    ConvergenceError,
    DimensionError,
    DomainError,
    ExponentError,
    GridMismatchError,
    PartitionError,
    PlanError,
)
from yode.paths import DiscretePath, Grid
from yode.solvers import (
    BallWarning,
    WindowPlan,
    check_exponents,
    delta_delay_solve,
    picard_window_solve,
    plan_for,
    plan_window,
    r_condition_lhs,
    residual,
    window_length,
)
from yode.young import sewing_constant

from conftest import fbm_path, linear_path
from oracles import delay_oracle


# -- exponents and plans -----------------------------------------------------


def exact_tau(plan):
    with mpmath.workprec(200):
        e, K = mpmath.mpf(plan.epsilon), mpmath.mpf(plan.K)
        return (e / K) ** (1 / (mpmath.mpf(plan.alpha) - mpmath.mpf(plan.alpha_prime)))


def test_check_exponents():
    check_exponents(0.7, 0.5, 1.0, (0.6,))
    for args in [(0.5, 0.4, 1.0), (0.7, 0.7, 1.0), (0.7, 0.2, 1.0), (0.7, 0.5, 1.5), (0.7, 0.35, 0.5)]:
        with pytest.raises(ExponentError):
            check_exponents(*args)
    with pytest.raises(ExponentError) as exc:
        check_exponents(0.7, 0.35, 0.5)
    assert "<= 1" in str(exc.value)
    with pytest.raises(ExponentError):
        check_exponents(0.7, 0.5, 1.0, (0.5,))


def test_tau_example():
    assert window_length(0.1, 1.0, 0.75, 0.5) == pytest.approx(1e-4, rel=1e-15)


def test_trivial_plan_on_constant_driver():
    plan = plan_window(0.0, 3.0, 0.75, 0.6, 1.0, 1.0, 2.0)
    assert plan.trivial and plan.K == 0.0 and plan.R == 2.0
    X = DiscretePath.constant(Grid(0, 1, 65), 1.5)
    rep = picard_window_solve(fields.terminal(), X, 2.0, plan)
    assert np.all(rep.solution.values == 2.0) and rep.residual_sup == 0.0


def test_bounded_plan_has_unit_radius():
    for c, sup in [(0.1, 1.0), (2.0, 0.5), (10.0, 3.0)]:
        plan = plan_window(1.3, c, 0.8, 0.6, 1.0, 1.0, 0.2, bounded_mode=True, F_sup=sup)
        k = sewing_constant(1.2)
        assert plan.R == 1.0 and plan.K == pytest.approx((k + 1) * 1.3 * (2 * c + sup))
    with pytest.raises(DomainError):
        plan_window(1.3, 1.0, 0.8, 0.6, 1.0, 1.0, 0.2, bounded_mode=True)


def test_unbounded_plan_formula_and_radius():
    plan = plan_window(2.0, 0.7, 0.9, 0.7, 0.5, 1.5, 0.3)
    k = sewing_constant(0.7 * 0.5 + 0.7)
    assert plan.K == pytest.approx((k + 1) * 2.0 * 2 * 0.7 * (1 + 1.5**0.35), rel=1e-15)
    assert plan.epsilon == min(plan.K / 2, 1.0) / 2
    assert plan.tau == pytest.approx(float(exact_tau(plan)), rel=1e-15)
    assert abs(plan.r_condition_gap()) <= 1e-9 * plan.R
    assert plan.R >= 0.3


def test_plan_error_when_no_radius():
    # beta = 1 with a large enough epsilon leaves no admissible radius
    with pytest.raises(PlanError):
        plan_window(1.0, 1.0, 0.9, 0.6, 1.0, 1.0, 1.0)


def test_plan_rejects_bad_epsilon():
    with pytest.raises(DomainError):
        plan_window(1.0, 1.0, 0.9, 0.6, 0.5, 1.0, 1.0, epsilon=100.0)


@given(
    alpha=st.floats(0.55, 1.0),
    gap=st.floats(0.01, 0.5),
    beta=st.floats(0.05, 1.0),
    x=st.floats(0.01, 10),
    c=st.floats(0.01, 10),
    T=st.floats(0.1, 5),
    y0=st.floats(0, 3),
)
def test_plan_invariants(alpha, gap, beta, x, c, T, y0):
    ap = alpha - gap
    # the sewing constant in K needs a' beta + a' > 1
    assume(ap > 0.01 and alpha + ap * beta > 1 and ap * beta + ap > 1 + 1e-6)
    try:
        plan = plan_window(x, c, alpha, ap, beta, T, y0)
    except PlanError:
        return
    ref = exact_tau(plan)
    assert abs(plan.tau - ref) <= 1e-15 * ref
    assert plan.R >= y0
    lhs = r_condition_lhs(plan.R, plan.epsilon, T, plan.tau, ap, beta)
    assert lhs <= plan.R * (1 + 1e-12)
    if plan.R > y0:
        assert abs(plan.r_condition_gap()) <= 1e-9 * plan.R


def test_plan_for_uses_analytic_constants():
    X = fbm_path(0.8, 1, 257) * 0.1
    F = fields.make_composed(lambda t, x: float(np.tanh(x[0])), [(np.cos, 1.0)], 1.0, 0.5)
    plan = plan_for(F, X, 0.5, 0.75, 0.7)
    assert plan.constants_source == "analytic" and plan.beta == 0.5
    c = F.constants(0.7, X.grid)
    assert plan.c_F == max(0.0, c.c_time, c.c_space)
    # beta = 1 fields have no admissible radius for the default epsilon here
    with pytest.raises(PlanError):
        plan_for(fields.make_young_functional(np.cos, 1.0), X, 0.5, 0.75, 0.6)


# -- residual ------------------------------------------------------------------


def test_residual_examples():
    g = Grid.dyadic(12)
    X = DiscretePath(g, g.times)
    Y = DiscretePath(g, np.exp(g.times))
    sup, _ = residual(fields.terminal(), X, Y, 1.0)
    assert sup < 1e-3
    sup, _ = residual(fields.constant(1.0), X, DiscretePath.constant(g, 0.0), 0.0)
    assert sup == pytest.approx(1.0)
    with pytest.raises(GridMismatchError):
        residual(fields.zero(), X, linear_path(5), 0.0)


# -- method of steps -----------------------------------------------------------


def test_delta_constant_field_exact():
    X = fbm_path(0.75, 2, 257)
    F = fields.PathFunctional("c", lambda t, p: np.full((1, 1), 0.7), delay=1 / 256)
    rep = delta_delay_solve(F, X, 0.25, 1)
    expect = 0.25 + 0.7 * (X.values - X.values[0])
    assert np.max(np.abs(rep.solution.values - expect)) < 1e-13
    assert rep.residual_sup < 1e-14


def test_delta_delay_oracle():
    g = Grid(0.0, 0.5, 4097)
    X = DiscretePath(g, g.times)
    rep = delta_delay_solve(fields.delayed_terminal(0.25), X, 1.0)
    err = max(abs(rep.solution.values[i, 0] - delay_oracle(g.times[i])) for i in range(0, 4097, 64))
    assert err < 1e-4
    assert abs(rep.solution.values[-1, 0] - 1.53125) < 1e-4
    assert rep.residual_sup == 0.0 and rep.stabilized


def test_delta_stabilization_bitwise():
    X = fbm_path(0.75, 4, 257)
    rep = delta_delay_solve(fields.delayed_max(0.125), X, 0.5, keep_iterates=True)
    d = 32
    assert len(rep.iterates) == 257 // d + 1
    for n in range(1, len(rep.iterates)):
        keep = (n - 1) * d + 1
        assert np.array_equal(rep.iterates[n].values[:keep], rep.iterates[n - 1].values[:keep])
    assert rep.stabilized


def test_delta_is_deterministic():
    X = fbm_path(0.75, 4, 257)
    F = fields.delayed_young(np.cos, 1.0, 0.0625)
    a = delta_delay_solve(F, X, 0.5).solution
    b = delta_delay_solve(F, X, 0.5).solution
    assert a.equals(b)


@given(lam=st.floats(-5, 5), c=st.floats(-3, 3), seed=st.integers(0, 2**31))
def test_delta_constant_field_scales_linearly(lam, c, seed):
    X = fbm_path(0.75, seed, 33)
    F = fields.PathFunctional("c", lambda t, p: np.full((1, 1), c), delay=1 / 32).scaled(lam)
    rep = delta_delay_solve(F, X, 1.0, 1, probe=False)
    expect = 1.0 + lam * c * (X.values - X.values[0])
    assert np.max(np.abs(rep.solution.values - expect)) <= 1e-12 * (1 + abs(lam * c))


def test_delta_rejects_non_delay_fields():
    X = fbm_path(0.75, 1, 65)
    with pytest.raises(DomainError):
        delta_delay_solve(fields.terminal(), X, 1.0, 16)
    rep = delta_delay_solve(fields.terminal(), X, 1.0, 16, probe=False)
    assert not rep.stabilized or rep.warnings
    with pytest.raises(DomainError):
        delta_delay_solve(fields.terminal(), X, 1.0)
    with pytest.raises(PartitionError):
        delta_delay_solve(fields.delayed_terminal(0.25), X, 1.0, 5)


def test_delta_dimension_check():
    X = fbm_path(0.75, 1, 65)
    F = fields.PathFunctional("bad", lambda t, p: np.zeros((2, 1)), delay=0.25)
    with pytest.raises(DimensionError):
        delta_delay_solve(F, X, 1.0)


# -- windowed Picard -------------------------------------------------------------


def test_picard_zero_field_one_iteration():
    X = fbm_path(0.75, 1, 129)
    rep = picard_window_solve(fields.zero(), X, 3.0, None)
    assert np.all(rep.solution.values == 3.0)
    assert all(w.iterations == 1 for w in rep.windows)


def test_picard_exponential():
    g = Grid.dyadic(12)
    X = DiscretePath(g, g.times)
    rep = picard_window_solve(fields.terminal(), X, 1.0, "auto", 1e-10, alpha=1.0, alpha_prime=0.95)
    assert abs(rep.solution.values[-1, 0] - math.e) / math.e < 1e-3
    assert rep.decay_ratio is not None and rep.decay_ratio < 1
    assert rep.residual_sup < 1e-9
    assert any("no plan" in w for w in rep.warnings)


def test_picard_constant_field_exact():
    X = linear_path(1025)
    rep = picard_window_solve(fields.constant(1.0), X, 0.0, None)
    assert np.max(np.abs(rep.solution.values[:, 0] - X.times)) < 1e-13


@pytest.mark.parametrize(
    "F", [fields.delayed_terminal(0.25), fields.delayed_max(0.125), fields.delayed_young(np.cos, 1.0, 0.0625)]
)
def test_picard_agrees_with_method_of_steps(F):
    X = fbm_path(0.75, 2, 257)
    a = delta_delay_solve(F, X, 0.5).solution.values
    b = picard_window_solve(F, X, 0.5, None, 1e-13).solution.values
    assert np.max(np.abs(a - b)) < 1e-8


def test_picard_surfaces_non_convergence():
    X = fbm_path(0.75, 1, 65)
    with pytest.raises(ConvergenceError) as exc:
        picard_window_solve(fields.terminal(), X, 1.0, None, 1e-12, max_iter=1)
    assert exc.value.window_index == 0 and exc.value.last_delta > 0


def test_planned_windows_need_a_plan_and_use_tau():
    X = fbm_path(0.8, 1, 257)
    F = fields.make_young_functional(np.cos, 1.0)
    with pytest.raises(DomainError):
        picard_window_solve(F, X, 0.5, None, paper_windows=True)
    plan = WindowPlan(1.0, 0.1, 0.05, 10.0, 0.75, 0.6, 1.0, 1.0)
    rep = picard_window_solve(F, X, 0.5, plan, 1e-12, paper_windows=True)
    widths = {w.end_index - w.start_index for w in rep.windows[:-1]}
    assert widths == {int(0.05 * 256)}


def test_ball_violation_is_a_warning():
    X = fbm_path(0.8, 1, 129)
    F = fields.terminal()
    plan = WindowPlan(1.0, 0.1, 0.25, 1e-9, 0.75, 0.6, 1.0, 1.0)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        rep = picard_window_solve(F, X, 0.5, plan, 1e-12)
    assert any(issubclass(w.category, BallWarning) for w in caught)
    assert rep.converged and any("left the ball" in w for w in rep.warnings)


def test_picard_adapts_windows():
    X = fbm_path(0.75, 5, 513)
    F = fields.make_young_functional(np.sin, 1.0).scaled(3.0)
    rep = picard_window_solve(F, X, 0.2, None, 1e-12, max_iter=30)
    assert rep.solution.values.shape == (513, 1)
    assert rep.residual_sup < 1e-10


def test_picard_bad_arguments():
    X = linear_path(9)
    with pytest.raises(DomainError):
        picard_window_solve(fields.zero(), X, 0.0, None, tol=0.0)
    with pytest.raises(DomainError):
        picard_window_solve(fields.zero(), X, 0.0, "fast")


def test_metadata_fields():
    X = fbm_path(0.8, 1, 129) * 0.1
    F = fields.make_composed(lambda t, x: float(np.tanh(x[0])), [(np.cos, 1.0)], 1.0, 0.5)
    rep = picard_window_solve(F, X, 0.5, "auto", alpha=0.75, alpha_prime=0.7)
    assert rep.plan is not None
    meta = rep.metadata()
    for key in ("residual_sup", "residual_holder", "windows", "iterations", "converged", "plan_K", "plan_epsilon", "plan_tau", "plan_R"):
        assert key in meta
