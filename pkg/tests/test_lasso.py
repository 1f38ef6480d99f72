import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.base import clone

from cirad.lasso import (GridLasso, LassoConfig, debias, detect_support,
                         kkt_residual, polish, resolve_lambda,
                         soft_threshold, solve_lasso)
from cirad.errors import RankError, ShapeError


def _random_complex(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def test_soft_threshold_known_values():
    x = np.array([3.0, -1.0, 0.5j, 0.0])
    out = soft_threshold(x, 1.0)
    assert np.allclose(out, [2.0, 0.0, 0.0, 0.0])


@settings(max_examples=30, deadline=None)
@given(re=st.floats(-5, 5), im=st.floats(-5, 5), t=st.floats(0.01, 3))
def test_soft_threshold_is_the_prox(re, im, t):
    # stationarity of t|z| + 0.5|z - x|^2: z = x (1 - t/|x|)+ keeps phase
    x = np.array([re + 1j * im])
    z = soft_threshold(x, t)[0]
    mag = abs(x[0])
    if mag <= t:
        assert z == 0
    else:
        assert abs(z - x[0] * (1 - t / mag)) < 1e-12


def test_lambda_rules(rng):
    A = _random_complex(rng, (6, 10))
    y = _random_complex(rng, (6,))
    assert resolve_lambda(A, y, LassoConfig(lam=0.7)) == 0.7
    auto = resolve_lambda(A, y, LassoConfig(sigma=0.5))
    assert auto == pytest.approx(2 * 0.5 * np.sqrt(2 * np.log(10)))
    nl = resolve_lambda(A, y, LassoConfig(lam="noiseless"))
    assert nl == pytest.approx(1e-6 * np.abs(A.conj().T @ y).max())


def test_invalid_config_rejected():
    with pytest.raises(ShapeError):
        LassoConfig(lam=-1.0)
    with pytest.raises(ShapeError):
        LassoConfig(max_iters=0)


def test_solve_matches_closed_form_on_unitary_operator(rng):
    # for unitary A the minimizer is soft_threshold(A* y, lam) exactly
    q, _ = np.linalg.qr(_random_complex(rng, (12, 12)))
    y = _random_complex(rng, (12,))
    lam = 0.4
    res = solve_lasso(q, y, LassoConfig(lam=lam, rel_tol=1e-14,
                                        max_iters=5000))
    want = soft_threshold(q.conj().T @ y, lam)
    assert np.abs(res.estimate - want).max() < 1e-6


def test_objective_trace_nonincreasing(rng):
    A = _random_complex(rng, (10, 30))
    y = _random_complex(rng, (10,))
    res = solve_lasso(A, y, LassoConfig(lam=0.5))
    trace = np.array(res.objective_trace)
    assert np.all(np.diff(trace) <= 1e-12)


def test_kkt_residual_small_at_solution(rng):
    A = _random_complex(rng, (8, 20))
    y = _random_complex(rng, (8,))
    res = solve_lasso(A, y, LassoConfig(lam=1.0, rel_tol=1e-14,
                                        max_iters=20_000))
    assert kkt_residual(A, y, res.estimate, 1.0) < 1e-4


def test_noiseless_exact_recovery(rng):
    A = _random_complex(rng, (12, 24))
    A /= np.linalg.norm(A, axis=0)
    x = np.zeros(24, dtype=complex)
    x[[3, 17]] = [1.0, -0.5 + 0.5j]
    y = A @ x
    res = solve_lasso(A, y, LassoConfig(lam="noiseless", rel_tol=1e-14,
                                        max_iters=20_000))
    est = polish(A, y, res.estimate)
    assert np.abs(est - x).max() < 1e-8


def test_shape_mismatch(rng):
    A = _random_complex(rng, (4, 6))
    with pytest.raises(ShapeError):
        solve_lasso(A, np.zeros(5), LassoConfig(lam=1.0))


def test_detect_support_thresholding():
    x = np.array([0.0, 0.2, 1.0, -0.5j])
    assert np.array_equal(detect_support(x, 0.3), [2, 3])
    assert np.array_equal(detect_support(x, 0.0), [1, 2, 3])
    with pytest.raises(ShapeError):
        detect_support(x, -0.1)


def test_debias_recovers_exact_amplitudes(rng):
    A = _random_complex(rng, (8, 12))
    x = np.zeros(12, dtype=complex)
    x[[2, 7]] = [2.0, 1.0j]
    out = debias(A, A @ x, [2, 7])
    assert np.abs(out - x).max() < 1e-10
    assert np.all(debias(A, A @ x, []) == 0)


def test_debias_rank_deficient(rng):
    A = _random_complex(rng, (8, 12))
    A[:, 5] = A[:, 2]
    with pytest.raises(RankError):
        debias(A, A[:, 2], [2, 5])
    with pytest.raises(RankError):
        debias(A, A[:, 2], list(range(9)))


def test_polish_keeps_estimate_when_refit_hurts(rng):
    A = _random_complex(rng, (6, 8))
    y = _random_complex(rng, (6,))
    x0 = np.zeros(8, dtype=complex)
    assert np.array_equal(polish(A, y, x0), x0)


def test_grid_lasso_estimator(rng):
    A = _random_complex(rng, (10, 20))
    A /= np.linalg.norm(A, axis=0)
    x = np.zeros(20, dtype=complex)
    x[[1, 9]] = [1.0, 1.0]
    y = A @ x
    est = GridLasso(lam="noiseless", max_iters=20_000, rel_tol=1e-14)
    est.fit(A, y)
    assert est.converged_ or est.n_iter_ == 20_000
    assert np.abs(est.predict(A) - y).max() < 1e-5
    assert set([1, 9]).issubset(set(est.support_.tolist()))
    # sklearn plumbing
    cloned = clone(est)
    assert cloned.get_params() == est.get_params()
