import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mcgm_anc.errors import InvalidArgumentError, NumericError
from mcgm_anc.plant import synthetic_plant
from mcgm_anc.signals import ImpulseResponse, Signal, gen_white_noise
from mcgm_anc.trainer import (Task, TrainerConfig, dataset_digest, input_vector, is_unimodal,
                              loss_scan, make_task, sgd_step, train, unroll_task)

from oracles import (direct_convolution, exact_central_difference, literal_input_vector,
                     weighted_loss)

FS = 16000.0


def random_task(rng, N):
    return Task(rng.standard_normal(N), rng.standard_normal(N), rng.standard_normal(N))


def rel_err(got, want):
    return abs(got - want) / abs(want)


class TestInputVector:
    def test_examples(self):
        xp = [1.0, 2.0, 3.0, 4.0]
        assert input_vector(xp, 0).tolist() == [1.0, 0.0, 0.0, 0.0]
        assert input_vector(xp, 2).tolist() == [3.0, 2.0, 1.0, 0.0]
        assert input_vector(xp, 3).tolist() == [4.0, 3.0, 2.0, 1.0]

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 40), st.data())
    def test_matches_literal(self, N, data):
        xp = np.random.default_rng(data.draw(st.integers(0, 10**6))).standard_normal(N)
        t = data.draw(st.integers(0, N - 1))
        assert input_vector(xp, t).tolist() == literal_input_vector(list(xp), t)

    @pytest.mark.parametrize("t", [-1, 4])
    def test_out_of_range(self, t):
        with pytest.raises(InvalidArgumentError):
            input_vector([1.0, 2.0, 3.0, 4.0], t)


class TestMakeTask:
    def test_identity_estimate(self):
        x = np.arange(5.0)
        task = make_task(x, x * 2, ImpulseResponse([1.0]))
        assert task.xprime.tolist() == x.tolist()
        assert task.d.tolist() == (x * 2).tolist()

    def test_zero_input(self):
        task = make_task(np.zeros(8), np.zeros(8), ImpulseResponse([0.3, 0.2]))
        assert not np.any(task.xprime)

    def test_filtered_reference_oracle(self):
        rng = np.random.default_rng(4)
        x, s = rng.standard_normal(32), rng.standard_normal(6)
        task = make_task(Signal(x, FS), Signal(x, FS), ImpulseResponse(s))
        np.testing.assert_allclose(task.xprime, direct_convolution(x, s), rtol=1e-12, atol=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            make_task(np.zeros(4), np.zeros(5), ImpulseResponse([1.0]))


class TestUnroll:
    def test_no_adaptation_loss(self):
        task = Task(np.ones(2), np.array([1.0, 2.0]), np.ones(2))
        loss, _ = unroll_task(task, 0.0, 0.5)
        assert loss == pytest.approx(0.5 * 1 + 4, rel=1e-15)

    def test_small_gradient_example(self):
        # e(0)=1, u(1)=[1,1], g(1)=u(0)=[1,0]: grad = -2 * e(1) * u(1).g(1) = -2.
        task = Task(np.ones(2), np.ones(2), np.ones(2))
        loss, grad = unroll_task(task, 0.0, 1.0)
        assert loss == 2.0
        assert grad == -2.0

    def test_zero_disturbance(self):
        rng = np.random.default_rng(0)
        task = Task(rng.standard_normal(16), np.zeros(16), rng.standard_normal(16))
        assert unroll_task(task, 0.01, 0.5) == (0.0, 0.0)

    @pytest.mark.parametrize("lam", [0.3, 0.9, 1.0])
    def test_loss_at_zero_mu(self, lam):
        rng = np.random.default_rng(1)
        task = random_task(rng, 20)
        want = sum(lam ** (19 - t) * task.d[t] ** 2 for t in range(20))
        assert unroll_task(task, 0.0, lam)[0] == pytest.approx(want, rel=1e-13)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 24), st.floats(0.0, 0.05), st.floats(0.1, 1.0), st.integers(0, 10**6))
    def test_loss_matches_oracle(self, N, mu, lam, seed):
        task = random_task(np.random.default_rng(seed), N)
        want = weighted_loss(list(task.xprime), list(task.d), mu, lam)
        assert unroll_task(task, mu, lam)[0] == pytest.approx(want, rel=1e-10, abs=1e-12)

    def test_gradient_at_zero_matches_exact_difference(self):
        rng = np.random.default_rng(2)
        for _ in range(25):
            N, lam = int(rng.integers(2, 17)), float(rng.uniform(0.2, 1.0))
            task = random_task(rng, N)
            _, grad = unroll_task(task, 0.0, lam)
            fd = exact_central_difference(task.xprime, task.d, 0.0, lam, 1e-12)
            assert rel_err(grad, fd) <= 1e-6

    def test_gradient_near_zero_first_order(self):
        rng = np.random.default_rng(3)
        mu = 1e-6
        for _ in range(25):
            N, lam = int(rng.integers(2, 17)), float(rng.uniform(0.2, 1.0))
            task = random_task(rng, N)
            _, grad = unroll_task(task, mu, lam)
            fd = exact_central_difference(task.xprime, task.d, mu, lam, mu / 100)
            assert rel_err(grad, fd) <= 1e-4

    @pytest.mark.parametrize("mu", [1e-3, 0.02, 0.1])
    def test_exact_mode_matches_difference(self, mu):
        rng = np.random.default_rng(5)
        for _ in range(10):
            N = int(rng.integers(2, 13))
            task = random_task(rng, N)
            _, grad = unroll_task(task, mu, 0.7, mode="exact")
            fd = exact_central_difference(task.xprime, task.d, mu, 0.7, mu * 1e-6)
            assert rel_err(grad, fd) <= 1e-6

    def test_accumulator_is_literal_sum(self):
        rng = np.random.default_rng(6)
        for N in (1, 2, 5, 16):
            task = random_task(rng, N)
            seen = []
            unroll_task(task, 0.01, 0.5,
                        observer=lambda t, e, u, g: seen.append((e, u.copy(), g.copy())))
            for t in range(N):
                acc = np.zeros(N)
                for i in range(1, t + 1):
                    e, u, _ = seen[i - 1]
                    acc = acc + e * u
                assert seen[t][2].tobytes() == acc.tobytes()

    def test_overflow_raises(self):
        task = random_task(np.random.default_rng(7), 256)
        with pytest.raises(NumericError, match="t="):
            unroll_task(task, 1e6, 0.5)

    def test_bad_mode(self):
        with pytest.raises(InvalidArgumentError):
            unroll_task(random_task(np.random.default_rng(0), 4), 0.0, 0.5, mode="bogus")


class TestSgdStep:
    def test_example(self):
        assert sgd_step(0.5, -2.0, 1e-3, 0.0, 1.0) == pytest.approx(0.501, rel=1e-15)

    def test_clamps(self):
        assert sgd_step(1e-4, 1e6, 1.0, 0.0, 1.0) == 0.0
        assert sgd_step(0.9, -10.0, 0.5, 0.0, 1.0) == 1.0

    def test_zero_gradient(self):
        assert sgd_step(0.25, 0.0, 0.1, 0.0, 1.0) == 0.25


@pytest.fixture(scope="module")
def small_dataset():
    plant = synthetic_plant(FS, primary_length=64, primary_delay=8, secondary_length=32,
                            secondary_delay=4, seed=3)
    pairs = []
    for i in range(2):
        x = gen_white_noise(2000, [9, i])
        pairs.append((x, Signal(np.convolve(x.samples, plant.primary.taps)[:2000], FS)))
    return plant, pairs


class TestTrain:
    def test_pinned_clamp(self, small_dataset):
        plant, data = small_dataset
        cfg = TrainerConfig(K=20, N=32, mu_init=0.01, mu_min=0.01, mu_max=0.01, alpha=1e-3)
        res = train(data, plant, cfg)
        assert np.all(res.mu_curve == 0.01)

    def test_zero_data_keeps_initial_mu(self, small_dataset):
        plant, _ = small_dataset
        zeros = [(Signal(np.zeros(100), FS), Signal(np.zeros(100), FS))]
        res = train(zeros, plant, TrainerConfig(K=10, N=32, mu_init=0.02, alpha=0.5))
        assert res.mu_final == 0.02

    def test_curve_within_clamps(self, small_dataset):
        plant, data = small_dataset
        cfg = TrainerConfig(K=60, N=32, alpha=0.01, mu_max=0.005)
        res = train(data, plant, cfg)
        assert len(res.mu_curve) == 61 and len(res.loss_curve) == 60
        assert np.all((res.mu_curve >= 0.0) & (res.mu_curve <= 0.005))
        assert res.mu_final == res.mu_curve[-1]

    def test_deterministic(self, small_dataset):
        plant, data = small_dataset
        cfg = TrainerConfig(K=40, N=32, alpha=1e-3, seed=4)
        a, b = train(data, plant, cfg), train(data, plant, cfg)
        assert a.mu_curve.tobytes() == b.mu_curve.tobytes()
        assert a.dataset_digest == b.dataset_digest == dataset_digest(data)

    def test_progress_callback(self, small_dataset):
        plant, data = small_dataset
        calls = []
        train(data, plant, TrainerConfig(K=5, N=16), progress=lambda *a: calls.append(a))
        assert [c[0] for c in calls] == list(range(5))

    def test_empty_dataset(self, small_dataset):
        with pytest.raises(InvalidArgumentError):
            train([], small_dataset[0], TrainerConfig(K=1, N=8))

    def test_dataset_too_short(self, small_dataset):
        short = [(Signal(np.ones(10), FS), Signal(np.ones(10), FS))]
        with pytest.raises(InvalidArgumentError):
            train(short, small_dataset[0], TrainerConfig(K=1, N=32))

    @pytest.mark.parametrize("kw", [dict(K=0), dict(lam=0.0), dict(lam=1.5), dict(alpha=0.0),
                                    dict(mu_init=2.0), dict(mu_min=0.5, mu_init=0.1),
                                    dict(N=0), dict(gradient="bogus")])
    def test_config_validation(self, kw):
        with pytest.raises(InvalidArgumentError):
            TrainerConfig(**kw)


class TestLossScan:
    def test_shape_and_overflow(self):
        tasks = [random_task(np.random.default_rng(i), 64) for i in range(3)]
        out = loss_scan(tasks, [0.0, 1e-3, 1e9], 0.5)
        assert out.shape == (3,)
        assert np.isfinite(out[0]) and out[2] == np.inf

    @pytest.mark.parametrize("vals,want", [([3, 2, 1, 2, 3], True), ([1, 2, 3], True),
                                           ([3, 1, 2, 1, 3], False), ([1, 1, 1], True),
                                           ([2, 1, np.inf], True), ([1, np.inf, 1], False)])
    def test_unimodal(self, vals, want):
        assert is_unimodal(vals) is want
