import math
from fractions import Fraction

import numpy as np
import pytest

from lgso.problems import (
    BOSTON_PSI_INIT,
    boston_nn_simulate,
    boston_objective,
    generate_mixing_matrix,
    get_problem,
    hump_h,
    list_problems,
    load_boston_csv,
    rosenbrock_f,
    rosenbrock_grad,
    rosenbrock_simulate,
    three_hump_objective,
    three_hump_simulate,
)


def test_registry_lists_five_problems():
    assert len(list_problems()) == 5
    with pytest.raises(ValueError, match="unknown problem"):
        get_problem("nope")


# -- three hump -------------------------------------------------------------


def test_hump_h_values():
    assert hump_h((0.0, 0.0)) == 0.0
    # 2 - 1.05 + 1/6 + 1 + 1, exact rational 187/60
    assert hump_h((1.0, 1.0)) == pytest.approx(float(Fraction(187, 60)), rel=1e-12)


def test_hump_zero_psi_rejected():
    with pytest.raises(ValueError, match="zero norm"):
        three_hump_simulate(np.zeros(2), np.array([[1.0, 2.0]]), np.random.default_rng(0))


def test_hump_branch_is_deterministic_at_unit_probability():
    # psi=(1,0): P(first branch)=1, so the huge second input never leaks into y
    rng = np.random.default_rng(3)
    xs = np.column_stack([np.full(500, -1.0), np.full(500, 1000.0)])
    ys = three_hump_simulate(np.array([1.0, 0.0]), xs, rng).reshape(-1)
    assert np.all(ys < 100.0)


def test_hump_mixture_frequencies():
    psi = np.array([1.0, 1.0])
    p = psi[0] / np.linalg.norm(psi)
    n = 100_000
    # fixed inputs far apart so the branch is readable from y
    xs = np.column_stack([np.full(n, -2.0), np.full(n, 5.0)])
    ys = three_hump_simulate(psi, xs, np.random.default_rng(11)).reshape(-1)
    cut = 0.5 * (-2.0 + 5.0) * hump_h(psi)
    freq = float(np.mean(ys < cut))
    assert abs(freq - p) < 3.0 * math.sqrt(p * (1 - p) / n)


def test_hump_objective_values():
    want = 1.0 / (1.0 + math.exp(5.0)) - 1.0 / (1.0 + math.exp(-5.0))
    assert three_hump_objective([5.0]) == pytest.approx(want, rel=1e-12)
    assert three_hump_objective([5.0]) == pytest.approx(-0.98661, abs=1e-5)
    assert three_hump_objective([1e9]) == pytest.approx(0.0, abs=1e-12)
    assert three_hump_objective([-1e9]) == pytest.approx(0.0, abs=1e-12)


def test_hump_objective_rejects_empty():
    with pytest.raises(ValueError, match="empty"):
        three_hump_objective([])


# -- rosenbrock family ------------------------------------------------------


def test_rosenbrock_values():
    assert rosenbrock_f(np.ones(10)) == 0.0
    assert rosenbrock_f(np.full(10, 2.0)) == 9.0
    assert np.array_equal(rosenbrock_grad(np.ones(10)), np.zeros(10))


def test_rosenbrock_rejects_scalar_psi():
    with pytest.raises(ValueError, match="2 dimensions"):
        rosenbrock_f(np.array([1.0]))


def test_rosenbrock_grad_matches_finite_differences():
    psi = np.linspace(-1.5, 2.5, 10)
    g = rosenbrock_grad(psi)
    h = 1e-5
    fd = np.zeros_like(psi)
    for i in range(psi.size):
        p = psi.copy()
        p[i] += h
        hi = rosenbrock_f(p)
        p[i] -= 2 * h
        lo = rosenbrock_f(p)
        fd[i] = (hi - lo) / (2 * h)
    assert np.max(np.abs(g - fd) / np.maximum(np.abs(g), 1.0)) < 1e-8


def test_rosenbrock_mc_mean_converges_to_f():
    prob = get_problem("rosenbrock")
    psi = np.full(10, 2.0)
    rng = np.random.default_rng(5)
    n = 100_000
    ys = prob.simulate(psi, prob.sample_x(rng, n), rng).reshape(-1)
    # noise variance: Var(mu)+1+1 = 100/3 + 2
    std = math.sqrt(100.0 / 3.0 + 2.0)
    assert abs(float(np.mean(ys)) - 9.0) < 4.0 * (std / math.sqrt(n)) * 2.0
    assert float(np.std(ys)) == pytest.approx(std, rel=0.02)


# -- submanifold rosenbrock --------------------------------------------------


def test_mixing_matrix_properties():
    q = generate_mixing_matrix(100, 10, 1337)
    assert q.shape == (100, 10)
    assert np.abs(q.T @ q - np.eye(10)).max() < 1e-10
    assert np.array_equal(q, generate_mixing_matrix(100, 10, 1337))
    with pytest.raises(ValueError, match="exceed"):
        generate_mixing_matrix(10, 10)


def test_submanifold_nullspace_invariance():
    prob = get_problem("submanifold_rosenbrock")
    q = generate_mixing_matrix(100, 10, 1337)
    rng = np.random.default_rng(7)
    psi = rng.standard_normal(100)
    v = rng.standard_normal(100)
    v -= q @ (q.T @ v)  # project onto the null space of q.T
    a = prob.analytic_expected_objective(psi)
    b = prob.analytic_expected_objective(psi + v)
    assert a == pytest.approx(b, rel=1e-9)


def test_submanifold_gradient_in_row_space():
    prob = get_problem("submanifold_rosenbrock")
    q = generate_mixing_matrix(100, 10, 1337)
    psi = np.full(100, 2.0)
    g = prob.analytic_gradient(psi)
    residual = g - q @ (q.T @ g)
    assert np.abs(residual).max() < 1e-8


def test_submanifold_gradient_matches_finite_differences():
    prob = get_problem("submanifold_rosenbrock")
    rng = np.random.default_rng(9)
    psi = rng.standard_normal(100)
    g = prob.analytic_gradient(psi)
    h = 1e-5
    for i in rng.choice(100, size=8, replace=False):
        p = psi.copy()
        p[i] += h
        hi = prob.analytic_expected_objective(p)
        p[i] -= 2 * h
        lo = prob.analytic_expected_objective(p)
        assert g[i] == pytest.approx((hi - lo) / (2 * h), rel=1e-6, abs=1e-8)


# -- nonlinear submanifold hump ----------------------------------------------


def test_nonlinear_hump_zero_psi_hits_mixture_error():
    prob = get_problem("nonlinear_submanifold_hump")
    with pytest.raises(ValueError, match="zero norm"):
        prob.simulate(np.zeros(40), np.array([[1.0, 2.0]]), np.random.default_rng(0))


def test_nonlinear_hump_embedding_is_bounded():
    a = generate_mixing_matrix(40, 16, 1337).T
    b = generate_mixing_matrix(16, 2, 1337).T
    rng = np.random.default_rng(1)
    for _ in range(50):
        psi = rng.uniform(-5, 5, size=40)
        psi_hat = b @ np.tanh(a @ psi)
        assert np.linalg.norm(psi_hat) <= 4.0  # ||B||_2 = 1, tanh in (-1,1)^16


# -- boston -----------------------------------------------------------------


def test_boston_dataset_shape():
    prob = get_problem("boston_nn")
    ds_features = prob.sample_x(np.random.default_rng(0), 3)
    assert ds_features.shape == (3, 13)
    assert prob.dim == 91
    assert prob.psi_init[0] == 0.0215
    assert prob.psi_init[-1] == 22.5328


def test_boston_simulate_is_deterministic():
    prob = get_problem("boston_nn")
    xs = prob.sample_x(np.random.default_rng(2), 5)
    a = prob.simulate(prob.psi_init, xs, np.random.default_rng(0))
    b = prob.simulate(prob.psi_init, xs, np.random.default_rng(99))
    assert np.array_equal(a, b)


def test_boston_zero_weights_predict_bias():
    prob = get_problem("boston_nn")
    psi = np.zeros(91)
    psi[-1] = 7.5
    xs = prob.sample_x(np.random.default_rng(4), 6)
    assert np.allclose(prob.simulate(psi, xs, np.random.default_rng(0)), 7.5)


def test_boston_rejects_wrong_psi_length():
    prob = get_problem("boston_nn")
    with pytest.raises(ValueError, match="91"):
        prob.simulate(np.zeros(90), prob.sample_x(np.random.default_rng(0), 1), np.random.default_rng(0))


def test_boston_objective_values():
    t = np.array([1.0, 2.0, 3.0])
    assert boston_objective(t, t) == 0.0
    assert boston_objective(t + 1.0, t) == pytest.approx(1.0)
    with pytest.raises(ValueError, match="mismatch"):
        boston_objective(np.ones(3), np.ones(4))


def test_boston_initial_rmse_reference():
    # pinned once from this implementation on the shipped dataset
    prob = get_problem("boston_nn")
    rmse = prob.analytic_expected_objective(BOSTON_PSI_INIT)
    assert rmse == pytest.approx(6.656037849428479, rel=1e-9)
    assert rmse > 0.0


def test_boston_full_pass_prediction_count():
    prob = get_problem("boston_nn")
    import lgso.problems as problems_mod

    ds = load_boston_csv(problems_mod._default_boston_path())
    preds = boston_nn_simulate(BOSTON_PSI_INIT, ds)
    assert preds.shape == (506,)
    assert prob.calls_per_sample == pytest.approx(1.0 / 506.0)


def test_boston_exact_gradient_matches_fd():
    prob = get_problem("boston_nn")
    g = prob.analytic_gradient(BOSTON_PSI_INIT)
    h = 1e-6
    rng = np.random.default_rng(12)
    for i in rng.choice(91, size=6, replace=False):
        p = BOSTON_PSI_INIT.copy()
        p[i] += h
        hi = prob.analytic_expected_objective(p)
        p[i] -= 2 * h
        lo = prob.analytic_expected_objective(p)
        assert g[i] == pytest.approx((hi - lo) / (2 * h), rel=1e-4, abs=1e-8)


def test_boston_csv_loader_errors(tmp_path):
    short = tmp_path / "short.csv"
    short.write_text("1,2,3\n")
    with pytest.raises(ValueError, match="columns"):
        load_boston_csv(short)

    few = tmp_path / "few.csv"
    few.write_text("\n".join(",".join(["1.0"] * 14) for _ in range(5)) + "\n")
    with pytest.raises(ValueError, match="506"):
        load_boston_csv(few)
