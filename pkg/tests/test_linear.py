import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tmforecast.errors import (
    ConfigurationError,
    DataError,
    DegenerateFitError,
    InsufficientDataError,
    InvalidModelError,
)
from oracles import innovations_oracle, simulate_arma
from tmforecast.linear import (
    ArarModel,
    ArmaModel,
    DifferencingOp,
    apply_differencing,
    arar_fit,
    arar_predict,
    arar_prediction_path,
    arar_shorten,
    arima_predict_one_step,
    arima_prediction_path,
    arma_innovations,
    arma_predict_one_step,
    arma_prediction_path,
    fit_ar_yule_walker,
    fit_arma,
    hw_fit,
    hw_forecast,
    hw_init,
    hw_prediction_path,
    hw_update,
    innovations,
)


# ---- innovations ------------------------------------------------------------

def test_innovations_ma1_hand_values():
    state = innovations([1.25, 0.5, 0.0, 0.0], 3)
    # theta_11 = gamma_1 / v_0; v_1 = gamma_0 - theta_11^2 v_0
    assert state.theta(1, 1) == pytest.approx(0.4, abs=1e-15)
    assert state.v[1] == pytest.approx(1.05, abs=1e-15)
    assert state.v[0] == 1.25


def test_innovations_white_noise():
    state = innovations([2.0, 0.0, 0.0], 5)
    for n in range(1, 6):
        assert np.all(state.theta_nj[n] == 0)
    np.testing.assert_array_equal(state.v, 2.0)


def test_innovations_rejects_bad_acvf():
    with pytest.raises(InvalidModelError):
        innovations([0.0, 0.0], 2)
    with pytest.raises(InvalidModelError):
        innovations([1.0], 0)


@pytest.mark.parametrize("phi,theta", [((0.5,), (0.4,)), ((), (0.5,)), ((0.7, -0.2), (0.3,)), ((0.9,), ())])
def test_innovations_variance_monotone_and_bounded(phi, theta):
    model = ArmaModel(phi, theta, 1.7)
    state = arma_innovations(model, 40)
    v = state.v[1:]
    assert np.all(np.diff(v) <= 1e-12)
    assert np.all(v >= model.noise_variance - 1e-12)
    assert v[-1] == pytest.approx(model.noise_variance, rel=1e-6)


def test_arma_model_validation():
    with pytest.raises(InvalidModelError):
        ArmaModel((1.2,), ())
    with pytest.raises(InvalidModelError):
        ArmaModel((), (1.5,))
    with pytest.raises(InvalidModelError):
        ArmaModel((0.5,), (), noise_variance=0.0)


def test_arma_acvf_matches_closed_form():
    phi, theta, s2 = 0.5, 0.4, 1.3
    g = ArmaModel((phi,), (theta,), s2).acvf(5)
    g0 = s2 * (1 + 2 * theta * phi + theta**2) / (1 - phi**2)
    g1 = s2 * (1 + theta * phi) * (phi + theta) / (1 - phi**2)
    np.testing.assert_allclose(g, [g0, g1] + [g1 * phi**k for k in range(1, 5)], rtol=1e-13)


# ---- ARMA one-step predictor --------------------------------------------------

def test_arma_predict_examples():
    assert arma_predict_one_step(ArmaModel((0.5,), ()), [1.0, 3.0, 4.0]) == pytest.approx(2.0)
    assert arma_predict_one_step(ArmaModel((), (), 1.0, mean=3.0), [1.0, 9.0]) == 3.0
    assert arma_predict_one_step(ArmaModel((), (0.5,), 1.0), [1.0]) == pytest.approx(0.4, abs=1e-15)
    with pytest.raises(InsufficientDataError):
        arma_predict_one_step(ArmaModel((0.5,), ()), [])


def test_arma11_matches_independent_oracle():
    phi, theta, s2 = 0.5, 0.4, 1.0
    x = simulate_arma([phi], [theta], 200, seed=11)
    model = ArmaModel((phi,), (theta,), s2)
    g0 = s2 * (1 + 2 * theta * phi + theta**2) / (1 - phi**2)
    g1 = s2 * (1 + theta * phi) * (phi + theta) / (1 - phi**2)
    gamma = [g0, g1] + [g1 * phi ** (k - 1) for k in range(2, 202)]
    oracle = innovations_oracle(gamma, x)
    path = arma_prediction_path(model, x)
    np.testing.assert_allclose(path, oracle, rtol=0, atol=1e-10)
    # the last step through the public one-step API
    assert abs(arma_predict_one_step(model, x) - oracle[-1]) < 1e-10
    # projection onto the observed past gives the same best linear predictor
    G = np.array([[gamma[abs(i - j)] for j in range(50)] for i in range(50)])
    proj = np.linalg.solve(G, np.array(gamma[1:51])[::-1]) @ x[:50]
    assert abs(path[50] - proj) < 1e-10


def test_arma_predictions_with_mean_and_ar2():
    x = simulate_arma([0.6, -0.3], [], 60, seed=3) + 10.0
    model = ArmaModel((0.6, -0.3), (), 1.0, mean=10.0)
    # n >= m: pure AR recursion on the demeaned history
    expected = 10.0 + 0.6 * (x[-1] - 10.0) - 0.3 * (x[-2] - 10.0)
    assert arma_predict_one_step(model, x) == pytest.approx(expected, abs=1e-12)


# ---- Yule-Walker ---------------------------------------------------------------

def test_yule_walker_ar1():
    x = simulate_arma([0.6], [], 10_000, seed=5)
    x = x - x.mean()
    coef, s2 = fit_ar_yule_walker(x, [1])
    g0 = np.dot(x, x) / x.size
    g1 = np.dot(x[1:], x[:-1]) / x.size
    assert 0.55 <= coef[0] <= 0.65
    assert coef[0] == pytest.approx(g1 / g0, rel=1e-12)
    assert s2 == pytest.approx(g0 - coef[0] * g1, rel=1e-12)


def test_yule_walker_white_noise_and_degenerate():
    x = np.random.default_rng(2).standard_normal(10_000)
    coef, _ = fit_ar_yule_walker(x - x.mean(), [1])
    assert -0.05 <= coef[0] <= 0.05
    with pytest.raises(DegenerateFitError):
        fit_ar_yule_walker(np.zeros(50), [1])


def test_yule_walker_subset_lags_solves_system():
    x = simulate_arma([0.4, 0.0, 0.2], [], 3000, seed=9)
    x = x - x.mean()
    lags = [1, 3]
    coef, s2 = fit_ar_yule_walker(x, lags)
    g = [np.dot(x[k:], x[: x.size - k]) / x.size for k in range(4)]
    G = np.array([[g[0], g[2]], [g[2], g[0]]])
    np.testing.assert_allclose(G @ coef, [g[1], g[3]], rtol=1e-10)
    assert s2 >= 0


def test_fit_arma_recovers_orders():
    x = simulate_arma([0.7], [], 4000, seed=1) + 5
    m = fit_arma(x, 1, 0)
    assert m.phi[0] == pytest.approx(0.7, abs=0.05)
    assert m.mean == pytest.approx(x.mean())
    m = fit_arma(simulate_arma([0.5], [0.4], 4000, seed=2), 1, 1)
    assert m.phi[0] == pytest.approx(0.5, abs=0.1)
    assert m.theta[0] == pytest.approx(0.4, abs=0.1)
    with pytest.raises(DegenerateFitError):
        fit_arma(np.full(40, 3.0))


# ---- ARAR ---------------------------------------------------------------------

def test_shorten_stationary_ar1_is_short_memory():
    y = simulate_arma([0.3], [], 500, seed=4)
    s, psi, k = arar_shorten(y)
    assert k == 0 and psi.size == 0
    np.testing.assert_array_equal(s, y)


def test_shorten_random_walk():
    y = np.cumsum(np.random.default_rng(8).standard_normal(500))
    s, psi, k = arar_shorten(y)
    assert k >= 1 and psi.size == k
    # the returned series is psi(B) applied to the input
    manual = y[k:] + sum(psi[j - 1] * y[k - j : y.size - j] for j in range(1, k + 1))
    np.testing.assert_allclose(s, manual, atol=1e-9)


def test_shorten_too_short():
    with pytest.raises(InsufficientDataError):
        arar_shorten(np.arange(5.0))


def test_arar_fit_ar1():
    y = simulate_arma([0.6], [], 2000, seed=12)
    model = arar_fit(y)
    assert model.k == 0
    assert model.lags[0] == 1 and 1 < model.lags[1] < model.lags[2] < model.lags[3] <= 26
    assert model.phi[0] == pytest.approx(0.6, abs=0.1)
    assert model.noise_variance == pytest.approx(1.0, rel=0.15)
    # the chosen lags minimize sigma^2: direct Yule-Walker on them reproduces the fit
    x = y - y.mean()
    coef, s2 = fit_ar_yule_walker(x, model.lags)
    np.testing.assert_allclose(coef, model.phi, atol=1e-12)
    assert s2 == pytest.approx(model.noise_variance, rel=1e-10)


def test_arar_fit_constant_series():
    with pytest.raises(DegenerateFitError):
        arar_fit(np.full(100, 4.0))


def test_xi_hand_product():
    model = ArarModel((0.5,), (0.2, 0.0, 0.0, 0.0), (1, 2, 3, 4), 0.0, 1.0)
    assert model.xi.size == 5
    assert model.xi[0] == pytest.approx(0.3, abs=1e-15)
    assert model.xi[1] == pytest.approx(-0.1, abs=1e-15)
    np.testing.assert_array_equal(model.xi[2:], 0.0)


# dyadic coefficients keep every product and partial sum exact, so equality is exact
dyadic = st.integers(-64, 64).map(lambda k: k / 64)


@given(
    st.lists(dyadic, max_size=4),
    st.lists(dyadic, min_size=4, max_size=4),
    st.lists(st.integers(2, 26), min_size=3, max_size=3, unique=True),
)
def test_xi_is_polynomial_product(psi, phi, rest):
    lags = (1, *sorted(rest))
    model = ArarModel(tuple(psi), tuple(phi), lags, 0.0, 1.0)
    a = [1.0] + psi
    b = [0.0] * (lags[-1] + 1)
    b[0] = 1.0
    for lag, c in zip(lags, phi):
        b[lag] -= c
    prod = [0.0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        for j, bj in enumerate(b):
            prod[i + j] += ai * bj
    assert model.xi.tolist() == prod[1:]


def test_arar_predict_constant():
    model = ArarModel((), (0.0, 0.0, 0.0, 0.0), (1, 2, 3, 4), 2.5, 1.0)
    np.testing.assert_array_equal(arar_predict(model, np.arange(10.0), 4), 2.5)


def test_arar_predict_matches_unrolled_recursion():
    y = simulate_arma([0.6], [], 400, seed=21) + 3.0
    model = arar_fit(y)
    xi, c = model.xi, model.constant
    d = xi.size
    p1 = c - sum(xi[j - 1] * y[-j] for j in range(1, d + 1))
    ext = list(y) + [p1]
    p2 = c - sum(xi[j - 1] * ext[-j] for j in range(1, d + 1))
    ext.append(p2)
    p3 = c - sum(xi[j - 1] * ext[-j] for j in range(1, d + 1))
    got = arar_predict(model, y, 3)
    np.testing.assert_allclose(got, [p1, p2, p3], rtol=0, atol=1e-10)
    assert arar_predict(model, y, 1)[0] == pytest.approx(p1, abs=1e-10)
    path = arar_prediction_path(model, y)
    assert path[-1] == pytest.approx(p1, abs=1e-10)
    assert path[300] == pytest.approx(arar_predict(model, y[:300], 1)[0], abs=1e-10)


def test_arar_predict_short_history():
    model = ArarModel((0.5,), (0.1, 0.0, 0.0, 0.0), (1, 2, 3, 4), 0.0, 1.0)
    with pytest.raises(InsufficientDataError):
        arar_predict(model, np.ones(4), 1)


# ---- ARIMA --------------------------------------------------------------------

def test_arima_examples():
    wn = ArmaModel((), (), 1.0, 0.0)
    assert arima_predict_one_step(wn, DifferencingOp(1), [3.0, 5.0]) == 5.0
    m = ArmaModel((0.5,), (), 1.0, 0.2)
    x = [1.0, 2.0, 0.5, 4.0]
    assert arima_predict_one_step(m, DifferencingOp(0), x) == arma_predict_one_step(m, x)
    assert arima_predict_one_step(wn, 2, [1.0, 2.0, 3.0, 4.0]) == 5.0
    with pytest.raises(InsufficientDataError):
        arima_predict_one_step(wn, 2, [1.0, 2.0])


@given(st.lists(st.integers(-10**6, 10**6), min_size=3, max_size=40), st.integers(0, 2))
def test_differencing_round_trip_exact(values, d):
    x = np.array(values, dtype=float)
    diffed, op = apply_differencing(x, d)
    assert op.d == d and len(op.initial_values) == d
    np.testing.assert_array_equal(op.invert(diffed), x)


@given(st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=40), st.integers(0, 2))
def test_differencing_round_trip_floats(values, d):
    x = np.array(values)
    diffed, op = apply_differencing(x, d)
    np.testing.assert_allclose(op.invert(diffed), x, rtol=0, atol=1e-9)


def test_arima_path_matches_one_step():
    x = np.cumsum(simulate_arma([0.4], [], 80, seed=6))
    model = ArmaModel((0.4,), (), 1.0, 0.0)
    path = arima_prediction_path(model, 1, x)
    for t in (5, 40, 80):
        assert path[t] == pytest.approx(arima_predict_one_step(model, 1, x[:t]), abs=1e-12)


# ---- Holt-Winters ---------------------------------------------------------------

def test_hw_init_examples():
    s = hw_init(1, 3, 0.5, 0.5)
    assert (s.level, s.slope) == (3, 2)
    s = hw_init(5, 5, 0.5, 0.5)
    assert (s.level, s.slope) == (5, 0)
    with pytest.raises(ConfigurationError):
        hw_init(1, 2, 1.5, 0.5)
    with pytest.raises(ConfigurationError):
        hw_init(1, 2, 0.5, 0.0)


def test_hw_update_examples():
    s = hw_update(hw_init(1, 3, 0.5, 0.5), 5.0)
    assert s.level == 5.0 and s.slope == 2.0
    with pytest.raises(DataError):
        hw_update(s, float("nan"))


def _literal_update(a, b, y, alpha, beta):
    a_new = alpha * y + (1 - alpha) * (a + b)
    return a_new, beta * (a_new - a) + (1 - beta) * b


def test_hw_update_agrees_with_textbook_form():
    rng = np.random.default_rng(0)
    for _ in range(50):
        a, b, y = rng.normal(size=3) * 10
        alpha, beta = rng.uniform(0.01, 0.99, 2)
        got = hw_update(type(hw_init(0, 0, alpha, beta))(a, b, alpha, beta), y)
        np.testing.assert_allclose((got.level, got.slope), _literal_update(a, b, y, alpha, beta), rtol=1e-12, atol=1e-12)


def test_hw_forecast_examples():
    s = hw_init(1, 3, 0.5, 0.5)
    assert hw_forecast(s, 1) == 5.0
    for alpha, beta in [(0.1, 0.9), (0.5, 0.5), (0.99, 0.01)]:
        s = hw_init(1, 2, alpha, beta)
        for y in (3, 4):
            s = hw_update(s, y)
        assert hw_forecast(s, 1) == 5.0
    assert hw_forecast(hw_init(5, 5, 0.3, 0.3), 10) == 5.0
    with pytest.raises(ConfigurationError):
        hw_forecast(s, 0)


@settings(max_examples=50)
@given(st.floats(-100, 100), st.floats(-10, 10), st.floats(0.01, 0.99), st.floats(0.01, 0.99))
def test_hw_exact_on_linear_trend(a, b, alpha, beta):
    y = a + b * np.arange(1, 21)
    s = hw_init(y[0], y[1], alpha, beta)
    for t in range(2, 20):
        assert abs(hw_forecast(s, 1) - y[t]) < 1e-12 * max(1.0, abs(y[t]))
        s = hw_update(s, y[t])


def test_hw_fit_linear_tie_break():
    assert hw_fit(np.arange(1.0, 30.0), 0.05) == (0.05, 0.05)


def test_hw_fit_matches_exhaustive_grid():
    rng = np.random.default_rng(3)
    y = 2.0 + 0.3 * np.arange(60) + rng.normal(0, 1.0, 60)
    best = None
    grid = [round(0.05 * i, 10) for i in range(1, 20)]
    for alpha in grid:
        for beta in grid:
            s = hw_init(y[0], y[1], alpha, beta)
            sse = 0.0
            for t in range(2, y.size):
                sse += (y[t] - hw_forecast(s, 1)) ** 2
                s = hw_update(s, y[t])
            if best is None or sse < best[0]:
                best = (sse, alpha, beta)
    assert hw_fit(y, 0.05) == pytest.approx(best[1:], abs=1e-12)


def test_hw_fit_too_short():
    with pytest.raises(InsufficientDataError):
        hw_fit([1.0, 2.0])


def test_hw_path_matches_scalar_recursion():
    y = np.random.default_rng(1).normal(size=30).cumsum()
    path = hw_prediction_path(y, 0.3, 0.2)
    s = hw_init(y[0], y[1], 0.3, 0.2)
    for t in range(2, 30):
        assert path[t] == pytest.approx(hw_forecast(s, 1), abs=1e-12)
        s = hw_update(s, y[t])
    assert path[30] == pytest.approx(hw_forecast(s, 1), abs=1e-12)


# ---- determinism --------------------------------------------------------------

def test_predictors_are_deterministic():
    y = simulate_arma([0.5], [0.3], 150, seed=30) + 4
    a, b = fit_arma(y, 1, 1), fit_arma(y, 1, 1)
    assert a == b
    assert np.array_equal(arma_prediction_path(a, y), arma_prediction_path(b, y))
    m1, m2 = arar_fit(y), arar_fit(y)
    assert np.array_equal(arar_predict(m1, y, 5), arar_predict(m2, y, 5))
    assert hw_fit(y) == hw_fit(y)
