import numpy as np
import pytest

import sglq


def check_loss_ref(u, tau):
    return float(np.mean(u * (tau - (u <= 0))))


def test_check_loss_matches_definition():
    u = np.array([-2.0, -0.5, 0.0, 0.3, 4.0])
    for tau in (0.1, 0.5, 0.9):
        assert sglq.check_loss(u, tau) == pytest.approx(check_loss_ref(u, tau), rel=1e-15)


def test_prox_pieces():
    a = np.array([1.2, -0.4])
    out = sglq.prox_h(a, np.array([0.3, 0.3]), np.array([0.5]), [0, 0])
    norm = np.sqrt(0.82)
    np.testing.assert_allclose(out, np.array([0.9, -0.1]) * (norm - 0.5) / norm, rtol=1e-14)
    np.testing.assert_array_equal(sglq.soft_threshold(np.array([0.5, -2.0]), np.array([1.0, 1.0])), [0.0, -1.0])
    np.testing.assert_array_equal(sglq.box_project(np.array([-1.0, 0.2, 3.0]), 0.3), [-0.3, 0.2, 0.7])
    np.testing.assert_array_equal(
        sglq.group_soft_threshold(np.array([3.0, 4.0]), np.array([5.0]), [0, 0]), [0.0, 0.0])


def test_unpenalized_fit_matches_linear_program():
    linprog = pytest.importorskip("scipy.optimize").linprog
    rng = np.random.default_rng(3)
    n, p, tau = 40, 3, 0.3
    X = rng.standard_normal((n, p))
    y = 1.0 + X @ np.array([1.0, -2.0, 0.5]) + rng.standard_normal(n)
    res = sglq.fit(X, y, tau=tau, eps1=1e-9, eps2=1e-9, max_iters=200000)
    assert res["converged"]

    # variables: beta0+, beta0-, beta+, beta-, r+, r-
    c = np.concatenate([np.zeros(2 + 2 * p), tau * np.ones(n) / n, (1 - tau) * np.ones(n) / n])
    A = np.hstack([np.ones((n, 1)), -np.ones((n, 1)), X, -X, np.eye(n), -np.eye(n)])
    lp = linprog(c, A_eq=A, b_eq=y, bounds=(0, None), method="highs")
    assert lp.status == 0
    assert res["objective"] == pytest.approx(lp.fun, rel=1e-6)
    assert sglq.objective(X, y, tau, res["beta0"], res["beta"]) == pytest.approx(res["objective"], rel=1e-12)


def test_lambda_max_gives_zero_coefficients():
    data = sglq.simulate("poly", 120, 20, "homo-normal2", 0.5, seed=4)
    X, y, groups = data["X"], data["y"], data["groups"]
    for alpha in (0.0, 0.5, 1.0):
        lmax = sglq.lambda_max(X, y, 0.5, alpha, groups=groups)
        res = sglq.fit(X, y, tau=0.5, lam=(1 - alpha) * lmax, mu=alpha * lmax, groups=groups)
        assert not np.any(res["beta"])


def test_path_and_metrics():
    data = sglq.simulate("timing", 80, 40, "normal3", 0.5, seed=9)
    X, y = data["X"], data["y"]
    lmax = sglq.lambda_max(X, y, 0.5, 1.0)
    grid = sglq.lambda_grid(lmax, 10, 0.05)
    path = sglq.solve_path(X, y, 0.5, 1.0, grid)
    assert path["beta"].shape == (10, 40)
    assert not np.any(path["beta"][0])
    assert np.count_nonzero(path["beta"][-1]) > 0
    m = sglq.metrics(path["beta"][-1], data["beta"])
    assert m["mse"] == pytest.approx(float(np.mean((path["beta"][-1] - data["beta"]) ** 2)), rel=1e-12)


def test_simulate_is_deterministic():
    a = sglq.simulate("timing", 30, 15, "laplace", 0.25, seed=5)
    b = sglq.simulate("timing", 30, 15, "laplace", 0.25, seed=5)
    np.testing.assert_array_equal(a["X"], b["X"])
    np.testing.assert_array_equal(a["y"], b["y"])


def test_bad_input_raises_value_error():
    with pytest.raises(ValueError):
        sglq.fit(np.ones((3, 2)), np.ones(4))
    with pytest.raises(ValueError):
        sglq.simulate("timing", 30, 15, "cauchy")
