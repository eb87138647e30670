import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from yode import fields
from yode.drivers import parse_driver_spec
from yode.errors import DomainError, GridMismatchError, MissingConstantsError
from yode.paths import DiscretePath, Grid
from yode.young import IntegrandPath, young_integrate, young_sum

from conftest import fbm_path, linear_path

ALL_NONANTICIPATING = [
    ("dupire-max", fields.running_max),
    ("identity", fields.terminal),
    ("initial", fields.initial),
    ("zero", fields.zero),
    ("young-cos", lambda: fields.make_young_functional(np.cos, 1.0)),
    ("young-one", lambda: fields.make_young_functional(lambda t: np.ones_like(t), 1.0)),
    ("clamp", lambda: fields.make_composed(lambda t, x: min(max(x[0], -1.0), 1.0), [(np.sin, 1.0)], 1.0, 1.0)),
    ("max2", lambda: fields.make_composed(lambda t, x: float(np.max(x)), [(np.cos, 1.0), (lambda t: t, 1.0)], 1.0, 1.0)),
    ("dupire-mean", lambda: fields.make_dupire(lambda v: v.mean(axis=0), 1.0)),
]


# -- worked examples ---------------------------------------------------------


def test_running_max_on_increasing_path_is_terminal():
    Y = DiscretePath(Grid(0, 1, 50), np.linspace(-1, 3, 50) ** 3)
    assert np.array_equal(fields.running_max().along(Y)[:, :, 0], Y.values)


def test_initial_is_time_constant(fbm075):
    F = fields.initial()
    assert all(F.eval(t, fbm075)[0, 0] == fbm075.values[0, 0] for t in (0, 100, 512))


def test_terminal_value_passes_probe(fbm075):
    for t in (0, 50, 300, 511):
        assert fields.anticipation_probe(fields.terminal(), t, fbm075, 16, seed=t).passed


def test_young_functional_examples():
    Y = fbm_path(0.75, 2, 257)
    F1 = fields.make_young_functional(lambda t: np.ones_like(t), 1.0)
    assert np.allclose(F1.along(Y)[:, :, 0], Y.values - Y.values[0], atol=1e-14, rtol=0)
    F0 = fields.make_young_functional(lambda t: np.zeros_like(t), 1.0)
    assert np.all(F0.along(Y) == 0.0)
    g = Grid.dyadic(12)
    Ft = fields.make_young_functional(lambda t: t, 1.0)
    assert Ft.eval(g.n_points - 1, DiscretePath(g, g.times))[0, 0] == pytest.approx(0.5, abs=2e-4)


def test_young_functional_path_kernel():
    Y = fbm_path(0.75, 2, 65)
    g = DiscretePath(Y.grid, np.cos(Y.times))
    F = fields.make_young_functional(g, 1.0)
    G = fields.make_young_functional(np.cos, 1.0)
    assert np.array_equal(F.along(Y), G.along(Y))
    with pytest.raises(GridMismatchError):
        F.along(fbm_path(0.75, 2, 129))


def test_composed_examples():
    g = Grid.dyadic(12)
    Y = DiscretePath(g, g.times)
    one = lambda t: np.ones_like(t)
    F = fields.make_composed(lambda t, x: x[0], [(one, 1.0)], 1.0, 1.0)
    assert np.allclose(F.along(Y)[:, 0, 0], g.times, atol=1e-14, rtol=0)
    big = DiscretePath(g, 5 * np.sin(7 * g.times))
    C = fields.make_composed(lambda t, x: min(max(x[0], -1.0), 1.0), [(one, 1.0)], 1.0, 1.0, sup_bound=1.0)
    assert np.max(np.abs(C.along(big))) <= 1.0
    M = fields.make_composed(lambda t, x: float(np.max(x)), [(one, 1.0), (lambda t: t, 1.0)], 1.0, 1.0)
    assert M.eval(g.n_points - 1, Y)[0, 0] == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(DomainError):
        fields.make_composed(lambda t, x: x[0], [], 1.0, 1.0)


@pytest.mark.parametrize("name,make", ALL_NONANTICIPATING)
def test_along_matches_eval_bitwise(name, make):
    F = make()
    Y = fbm_path(0.75, 11, 65)
    stacked = np.stack([F.eval(t, Y) for t in range(65)])
    assert np.array_equal(F.along(Y), stacked)


@pytest.mark.parametrize(
    "F", [fields.delayed_terminal(0.25), fields.delayed_max(0.125), fields.delayed_young(np.cos, 1.0, 0.0625)]
)
def test_delayed_along_matches_eval(F):
    Y = fbm_path(0.75, 11, 65)
    assert np.array_equal(F.along(Y), np.stack([F.eval(t, Y) for t in range(65)]))


def test_scaled_field():
    Y = fbm_path(0.75, 1, 33)
    F = fields.running_max()
    G = F.scaled(-2.0)
    assert np.array_equal(G.along(Y), -2.0 * F.along(Y))
    c, d = F.constants(0.6, Y.grid), G.constants(0.6, Y.grid)
    assert d.c_time == 2 * c.c_time and d.c_space == 2 * c.c_space


def test_constants_missing_for_probe_fields():
    with pytest.raises(MissingConstantsError):
        fields.anticipating().constants(0.6, Grid(0, 1, 3))


def test_beta_validated():
    with pytest.raises(DomainError):
        fields.make_dupire(lambda v: v[-1], 1.5)


# -- probes ------------------------------------------------------------------


@pytest.mark.parametrize("name,make", ALL_NONANTICIPATING)
@given(seed=st.integers(0, 2**31), frac=st.floats(0, 1))
def test_builders_pass_anticipation_probe(name, make, seed, frac):
    Y = fbm_path(0.75, seed, 33)
    t = int(frac * 32)
    assert fields.anticipation_probe(make(), t, Y, 8, seed=seed).passed


def test_anticipating_field_fails(fbm075):
    rep = fields.anticipation_probe(fields.anticipating(), 100, fbm075, 4)
    assert not rep.passed and rep.failing_mutation == 0


def test_probe_vacuous_at_last_index(fbm075):
    rep = fields.anticipation_probe(fields.anticipating(), 512, fbm075)
    assert rep.passed and rep.n_mutations == 0


def test_probe_catches_reading_one_step_ahead(fbm075):
    F = fields.PathFunctional("peek", lambda t, p: p.values[min(t + 1, p.grid.n_points - 1)])
    assert not fields.anticipation_probe(F, 10, fbm075, 1).passed


def test_probe_on_constant_path_uses_unit_noise():
    Y = DiscretePath.constant(Grid(0, 1, 33), 2.0)
    assert not fields.anticipation_probe(fields.anticipating(), 3, Y, 1).passed


def test_delta_probe_examples(fbm075):
    d = fields.delay_steps(0.25, fbm075.grid)
    assert d == 128
    for t in (0, 100, 200, 511):
        assert fields.delta_anticipation_probe(fields.delayed_terminal(0.25), d, t, fbm075).passed
        assert fields.delta_anticipation_probe(fields.delayed_max(0.25), d, t, fbm075).passed
    assert not fields.delta_anticipation_probe(fields.terminal(), d, 300, fbm075).passed
    # the delayed field does read the value at (t - delta)+ itself
    assert not fields.delta_anticipation_probe(fields.delayed_terminal(0.25), d + 1, 300, fbm075).passed


# -- constants ---------------------------------------------------------------


def _sampler(text="fbm:H=0.75,n=129", seed=3):
    return fields.path_sampler(parse_driver_spec(text), seed)


def test_estimate_zero_field():
    c = fields.estimate_constants(fields.zero(), 0.6, 1.0, _sampler(), 10, 0)
    assert c.c_time == 0.0 and c.c_space == 0.0 and not c.degenerate


def test_estimate_flags_degenerate_sampler():
    c = fields.estimate_constants(fields.terminal(), 0.6, 1.0, lambda k: DiscretePath.constant(Grid(0, 1, 9), 0.0), 5, 0)
    assert c.degenerate and c.c_time == 0.0


def test_estimate_identity_space_constant():
    c = fields.estimate_constants(fields.terminal(), 0.6, 1.0, _sampler(), 60, 1)
    assert 0 < c.c_space <= 1.0 + 1e-12


def test_estimate_young_one_against_example_bound():
    F = fields.make_young_functional(lambda t: np.ones_like(t), 1.0)
    spec = parse_driver_spec("fbm:H=0.75,n=129,T=2")
    c = fields.estimate_constants(F, 0.6, 1.0, fields.path_sampler(spec, 4), 60, 2)
    bound = 2.0**0.6
    assert F.constants(0.6, spec.grid).c_space == pytest.approx(bound)
    assert 0 < c.c_space <= bound * (1 + 1e-12)


def test_estimate_is_monotone_in_samples():
    F = fields.running_max()
    s = _sampler()
    prev = None
    for n in (1, 3, 10, 25):
        c = fields.estimate_constants(F, 0.6, 1.0, s, n, 7)
        if prev is not None:
            assert c.c_time >= prev.c_time and c.c_space >= prev.c_space
        prev = c


def test_estimate_reproducible():
    F = fields.make_young_functional(np.sin, 1.0)
    a = fields.estimate_constants(F, 0.6, 1.0, _sampler(), 8, 5)
    b = fields.estimate_constants(F, 0.6, 1.0, _sampler(), 8, 5)
    assert a == b


def test_young_telescoping_is_exact_when_restarted():
    Y = fbm_path(0.75, 6, 129)
    g = np.cos
    F = fields.make_young_functional(g, 1.0)
    vals = F.along(Y)[:, :, 0]
    W = IntegrandPath.from_path(DiscretePath(Y.grid, g(Y.times)))
    for s, t in [(0, 128), (5, 6), (17, 90), (64, 128)]:
        restarted = young_integrate(W, Y, vals[s], s, t).integral_path.values[-1]
        assert np.array_equal(restarted, vals[t])
        assert vals[t] - vals[s] == pytest.approx(young_sum(W, Y, s, t), abs=1e-14)


# -- composition certificates and exponent transport -------------------------


def test_comp1_examples():
    Y = fbm_path(0.75, 3, 257)
    assert fields.composition_bound_certificate(fields.zero(), Y, 0.7, 1.0).lhs == 0.0
    L = linear_path(257)
    F = fields.make_young_functional(lambda t: np.ones_like(t), 1.0)
    c = fields.composition_bound_certificate(F, L, 0.7, 1.0)
    assert c.passed and c.lhs > 0


def test_comp1_running_max_with_estimated_constants():
    F = fields.running_max()
    est = fields.estimate_constants(F, 0.7, 1.0, _sampler("fbm:H=0.75,n=257", 9), 200, 1, pairs_per_sample=16)
    Y = fbm_path(0.75, 123, 257)
    assert fields.composition_bound_certificate(F, Y, 0.7, 1.0, constants=est).passed


@pytest.mark.parametrize("name,make", ALL_NONANTICIPATING[:2] + ALL_NONANTICIPATING[4:8])
@given(seed=st.integers(0, 2**31), data=st.data())
def test_comp_certificates_with_analytic_constants(name, make, seed, data):
    F = make()
    Y = fbm_path(0.75, seed, 65) * data.draw(st.floats(0.1, 5.0))
    Z = Y + fbm_path(0.75, seed + 1, 65) * data.draw(st.floats(1e-3, 1.0))
    i0 = data.draw(st.integers(0, 63))
    i1 = data.draw(st.integers(i0 + 1, 64))
    assert fields.composition_bound_certificate(F, Y, 0.7, 1.0, i0, i1).passed
    theta = data.draw(st.floats(0.05, 0.95))
    assert fields.composition_difference_certificate(F, Y, Z, 0.7, 1.0, i0, i1, theta).passed


@pytest.mark.parametrize("name,make", ALL_NONANTICIPATING[:2] + ALL_NONANTICIPATING[4:8])
@given(seed=st.integers(0, 2**31), T=st.floats(0.25, 4.0))
def test_exponent_transport_on_examples(name, make, seed, T):
    F = make()
    Y = fbm_path(0.8, seed, 65, T=T)
    lo, hi = 0.6, 0.75
    at_lo = F.constants(lo, Y.grid)
    assert fields.composition_bound_certificate(F, Y, lo, 1.0, constants=at_lo).passed
    moved = at_lo.transported(hi, T)
    assert fields.composition_bound_certificate(F, Y, hi, 1.0, constants=moved).passed


def test_exponent_transport_fails_for_time_only_field():
    # F(t, Y) = t^(a' beta) meets the time bound at a' with constant 1 but not at a > a'
    lo, hi = 0.6, 0.75
    F = fields.PathFunctional("clock", lambda t, p: np.full((p.dim, 1), p.times[t] ** lo))
    # a constant path has zero norm, so the right side is c itself; the grid caps the left side at step^(a' - a)
    Y = DiscretePath.constant(Grid(0.0, 1.0, 1025), 0.3)
    at_lo = fields.FieldConstants(1.0, 0.0, lo, 1.0)
    assert fields.composition_bound_certificate(F, Y, lo, 1.0, constants=at_lo).passed
    moved = at_lo.transported(hi, 1.0)
    c = fields.composition_bound_certificate(F, Y, hi, 1.0, constants=moved)
    assert not c.passed
    assert c.lhs == pytest.approx(1024 ** (hi - lo)) and c.rhs == 1.0


def test_transport_formula():
    c = fields.FieldConstants(2.0, 3.0, 0.6, 0.5)
    m = c.transported(0.8, 4.0)
    assert m.c_time == 2.0 * 4.0 ** (0.6 * 0.5)
    assert m.c_space == 3.0 * 4.0 ** (0.2 * 0.5)
    assert c.transported(0.8, 0.5).c_time == 2.0
    with pytest.raises(DomainError):
        c.transported(0.5, 1.0)
