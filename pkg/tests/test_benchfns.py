import numpy as np
import pytest

from evolm import benchfns
from evolm.errors import DomainError, ShapeError
from evolm.numerics import RngStream

# Value of tf6 at (-32, -32), the grid point nearest its global minimum
# (frozen from direct evaluation; the registry's declared minimum is the
# customary rounded 1).
TF6_NEAR_OPT = 0.998003838818649


def test_registry_has_nine_functions_with_declared_metadata():
    fns = benchfns.registry()
    assert [f.id for f in fns] == list(benchfns.FUNCTION_IDS)
    byid = {f.id: f for f in fns}
    assert byid["tf1"].dim == 30 and (byid["tf1"].lower, byid["tf1"].upper) == (-10, 10)
    assert byid["tf2"].dim == 30 and (byid["tf2"].lower, byid["tf2"].upper) == (-30, 30)
    assert byid["tf3"].f_min == pytest.approx(-418.9829 * 30)
    assert byid["tf4"].dim == 30 and (byid["tf4"].lower, byid["tf4"].upper) == (-600, 600)
    assert byid["tf5"].dim == 30 and (byid["tf5"].lower, byid["tf5"].upper) == (-50, 50)
    assert byid["tf6"].dim == 2 and (byid["tf6"].lower, byid["tf6"].upper) == (-65, 65)
    assert byid["tf6"].f_min == 1.0
    assert byid["tf7"].dim == 2 and byid["tf7"].f_min == 3.0
    assert byid["tf8"].dim == 10 and (byid["tf8"].lower, byid["tf8"].upper) == (-5, 5)
    assert byid["tf8"].f_min == 0.0
    assert byid["tf9"].dim == 10 and byid["tf9"].f_min == 0.0


def test_known_optima_reach_declared_minima():
    for fn in benchfns.registry():
        if fn.optimum is None:
            continue
        value = benchfns.evaluate(fn, fn.optimum)
        tol = 0.5 if fn.id == "tf3" else 1e-6
        assert abs(value - fn.f_min) < tol, fn.id


def test_griewank_zero_at_origin():
    fn = benchfns.get("tf4")
    assert benchfns.evaluate(fn, np.zeros(30)) == 0.0


def test_rosenbrock_zero_at_ones():
    fn = benchfns.get("tf2")
    assert benchfns.evaluate(fn, np.ones(30)) == 0.0


def test_goldstein_price_value_at_minimum():
    fn = benchfns.get("tf7")
    assert benchfns.evaluate(fn, np.array([0.0, -1.0])) == pytest.approx(3.0, abs=1e-12)


def test_foxholes_value_near_minimum():
    fn = benchfns.get("tf6")
    assert benchfns.evaluate(fn, np.array([-32.0, -32.0])) == pytest.approx(
        TF6_NEAR_OPT, abs=1e-9
    )


def test_schwefel_sine_optimum_within_half():
    fn = benchfns.get("tf3")
    value = benchfns.evaluate(fn, np.full(30, 420.9687))
    assert abs(value - (-418.9829 * 30)) < 0.5


def test_wrong_length_rejected():
    with pytest.raises(ShapeError):
        benchfns.evaluate(benchfns.get("tf7"), np.zeros(3))


def test_out_of_box_rejected():
    with pytest.raises(DomainError):
        benchfns.evaluate(benchfns.get("tf1"), np.full(30, 11.0))


def test_repeat_evaluation_identical():
    rng = RngStream(3)
    for fn in benchfns.registry():
        x = rng.uniform(fn.lower, fn.upper, fn.dim)
        assert benchfns.evaluate(fn, x) == benchfns.evaluate(fn, x)


def test_random_sampling_never_beats_declared_minimum():
    rng = RngStream(8)
    for fid in ("tf1", "tf2", "tf4", "tf7"):
        fn = benchfns.get(fid)
        xs = rng.uniform(fn.lower, fn.upper, (10**4, fn.dim))
        values = np.array([fn.evaluator(x) for x in xs])
        assert values.min() >= fn.f_min - 1e-9


def test_with_dim_rescopes_scalable_functions():
    fn = benchfns.get("tf1").with_dim(10)
    assert fn.dim == 10
    assert benchfns.evaluate(fn, np.zeros(10)) == 0.0
    with pytest.raises(DomainError):
        benchfns.get("tf6").with_dim(5)
    with pytest.raises(DomainError):
        benchfns.get("tf7", dim=5)


def test_composition_shifts_are_deterministic():
    a = benchfns.get("tf8")
    b = benchfns.get("tf8")
    assert np.array_equal(a.optimum, b.optimum)
    assert np.all(a.optimum >= -5.0) and np.all(a.optimum <= 5.0)
    x = np.full(10, 0.5)
    assert a.evaluator(x) == b.evaluator(x)


def test_unknown_id_rejected():
    with pytest.raises(DomainError):
        benchfns.get("tf10")
