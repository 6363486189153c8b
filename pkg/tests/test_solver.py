import math

import numpy as np
import pytest

from crossmodal.losses import misalign
from crossmodal.model import (
    CooccurrencePair,
    CorpusExample,
    Hyperparameters,
    KernelSpec,
)
from crossmodal import linalg
from crossmodal.solver import (
    TrainData,
    grad_S,
    grad_alpha,
    objective,
    project_alpha,
    prox_step,
    smooth_value,
    train,
)
from oracle_utils import fd_grad_S, fd_grad_alpha, random_instance


@pytest.fixture
def small_instance():
    return random_instance(np.random.default_rng(0))


class TestObjective:
    def test_zero_state_closed_form(self, small_instance):
        data, hyper, _, _ = small_instance
        m = len(data.train_images)
        l = len(data.pairs)
        S = np.zeros((data.text_dim(), data.image_dim()))
        alpha = np.zeros(m)
        expected = hyper.gamma * m + hyper.lam * l * math.log(2.0)
        assert objective(S, alpha, data, hyper) == pytest.approx(expected, rel=1e-12)

    def test_zero_weights(self, small_instance):
        data, hyper, _, _ = small_instance
        hyper0 = Hyperparameters(gamma=0.0, lam=0.0, kernel=hyper.kernel)
        S = np.zeros((data.text_dim(), data.image_dim()))
        assert objective(S, np.zeros(len(data.train_images)), data, hyper0) == 0.0

    def test_linearity_in_lambda(self, small_instance):
        data, hyper, S, alpha = small_instance
        from dataclasses import replace

        doubled = replace(hyper, lam=2 * hyper.lam)
        a = np.array(
            [float(c.text_features @ S @ c.image_features) for c in data.pairs]
        )
        mis = float(np.sum(misalign(a)))
        got = objective(S, alpha, data, doubled) - objective(S, alpha, data, hyper)
        assert got == pytest.approx(hyper.lam * mis, rel=1e-9)

    def test_smooth_value_is_objective_minus_trace_norm(self, small_instance):
        data, hyper, S, alpha = small_instance
        lhs = smooth_value(S, alpha, data, hyper)
        rhs = objective(S, alpha, data, hyper) - linalg.trace_norm(S)
        assert lhs == pytest.approx(rhs, abs=1e-12)


class TestGradients:
    def test_zero_weights_zero_grad(self, small_instance):
        data, hyper, S, alpha = small_instance
        hyper0 = Hyperparameters(gamma=0.0, lam=0.0, kernel=hyper.kernel)
        assert np.all(grad_S(S, alpha, data, hyper0) == 0)
        assert np.all(grad_alpha(S, alpha, data, hyper0) == 0)

    def test_single_pair_closed_form(self):
        rng = np.random.default_rng(1)
        x, z = rng.standard_normal(3), rng.standard_normal(4)
        data = TrainData(pairs=[CooccurrencePair(x, z)], p=3, q=4)
        hyper = Hyperparameters(gamma=0.0, lam=1.7)
        g = grad_S(np.zeros((3, 4)), np.zeros(0), data, hyper)
        np.testing.assert_allclose(g, -1.7 * np.outer(x, z), atol=1e-12)

    def test_single_image_alpha_closed_form(self):
        # at S = 0, alpha = 0: f = 0, hinge subgrad = -1, K(z, z) = 1
        z = np.array([0.3, -0.2])
        data = TrainData(
            train_images=[CorpusExample("i", z, 1)], p=2, q=2
        )
        hyper = Hyperparameters(gamma=0.8, lam=0.0, kernel=KernelSpec(bandwidth=1.0))
        g = grad_alpha(np.zeros((2, 2)), np.zeros(1), data, hyper)
        np.testing.assert_allclose(g, [-0.8], atol=1e-12)

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            data, hyper, S, alpha = random_instance(rng)
            np.testing.assert_allclose(
                grad_S(S, alpha, data, hyper),
                fd_grad_S(S, alpha, data, hyper),
                atol=1e-5,
            )
            np.testing.assert_allclose(
                grad_alpha(S, alpha, data, hyper),
                fd_grad_alpha(S, alpha, data, hyper),
                atol=1e-5,
            )


class TestSteps:
    def test_prox_pure_shrinkage(self):
        out = prox_step(np.diag([0.5, 0.3]), np.zeros((2, 2)), 1.0)
        np.testing.assert_allclose(out, 0.0, atol=1e-12)

    def test_prox_diag_example(self):
        out = prox_step(np.diag([3.0, 1.0]), np.zeros((2, 2)), 1.0)
        np.testing.assert_allclose(out, np.diag([2.0, 0.0]), atol=1e-12)

    def test_prox_large_L_keeps_point(self):
        rng = np.random.default_rng(3)
        S = rng.standard_normal((3, 4))
        g = rng.standard_normal((3, 4))
        out = prox_step(S, g, 1e12)
        np.testing.assert_allclose(out, S, atol=1e-9)

    def test_project_alpha(self):
        np.testing.assert_allclose(
            project_alpha([-1.0, 0.5, 9.0], 2.0), [0.0, 0.5, 2.0]
        )
        v = np.array([0.1, 1.9])
        np.testing.assert_allclose(project_alpha(v, 2.0), v)
        once = project_alpha([-3.0, 5.0], 2.0)
        np.testing.assert_allclose(project_alpha(once, 2.0), once)


class TestTrain:
    def test_zero_weights_converges_to_zero(self, small_instance):
        data, hyper, _, _ = small_instance
        hyper0 = Hyperparameters(gamma=0.0, lam=0.0, kernel=hyper.kernel)
        model, report = train(data, hyper0)
        assert report.converged
        assert report.iterations == 1
        np.testing.assert_allclose(model.S, 0.0)
        np.testing.assert_allclose(model.alpha, 0.0)
        assert report.final_objective == 0.0

    def test_first_step_rank_one(self):
        rng = np.random.default_rng(4)
        x, z = rng.standard_normal(3), rng.standard_normal(4)
        data = TrainData(pairs=[CooccurrencePair(x, z)], p=3, q=4)
        hyper = Hyperparameters(gamma=0.0, lam=50.0, max_iter=1, tol=1e-16)
        model, _ = train(data, hyper)
        assert linalg.numerical_rank(model.S) == 1
        # the single singular direction is x z' with positive scale
        scale = float(np.vdot(model.S, np.outer(x, z)))
        assert scale > 0
        np.testing.assert_allclose(
            model.S, scale / np.vdot(np.outer(x, z), np.outer(x, z)) * np.outer(x, z),
            atol=1e-8,
        )

    def test_monotone_descent_and_feasibility(self, small_instance):
        data, hyper, _, _ = small_instance
        from dataclasses import replace

        hyper = replace(hyper, max_iter=60, tol=1e-12)
        model, report = train(data, hyper)
        trace = np.array(report.objective_trace)
        assert np.all(np.diff(trace) <= 1e-9)
        assert np.all(model.alpha >= 0) and np.all(model.alpha <= hyper.C)

    def test_fixed_point_restart(self, small_instance):
        data, hyper, _, _ = small_instance
        from dataclasses import replace

        hyper = replace(hyper, max_iter=400, tol=1e-10)
        model, report = train(data, hyper)
        assert report.converged
        _, report2 = train(
            data,
            replace(hyper, max_iter=1),
            init_S=model.S,
            init_alpha=model.alpha,
        )
        first, second = report2.objective_trace[0], report2.objective_trace[-1]
        assert abs(first - second) / max(1.0, first) < hyper.tol * 10

    def test_deterministic_trace(self, small_instance):
        data, hyper, _, _ = small_instance
        _, r1 = train(data, hyper)
        _, r2 = train(data, hyper)
        assert r1.objective_trace == r2.objective_trace

    def test_verbose_log_format(self, small_instance):
        data, hyper, _, _ = small_instance
        lines = []
        from dataclasses import replace

        train(data, replace(hyper, max_iter=3, tol=1e-16), verbose=True, log=lines.append)
        assert len(lines) == 3
        first = lines[0].split(",")
        assert len(first) == 5 and first[0] == "1"

    def test_intramodal_only_mode(self):
        # no texts, no pairs: the kernel machine alone
        rng = np.random.default_rng(5)
        images = [
            CorpusExample(f"i{j}", rng.standard_normal(3) + (2 if j % 2 else -2), 1 if j % 2 else -1)
            for j in range(6)
        ]
        data = TrainData(train_images=images, p=2)
        model, report = train(data, Hyperparameters(lam=0.0, max_iter=100))
        assert np.all(model.S == 0)
        assert np.any(model.alpha > 0)
        trace = np.array(report.objective_trace)
        assert np.all(np.diff(trace) <= 1e-9)

    def test_dimension_mismatch_rejected(self):
        from crossmodal.errors import DataError

        texts = [CorpusExample("t", np.ones(3), 1)]
        pairs = [CooccurrencePair(np.ones(4), np.ones(2))]
        with pytest.raises(DataError):
            train(TrainData(source_texts=texts, pairs=pairs), Hyperparameters())
