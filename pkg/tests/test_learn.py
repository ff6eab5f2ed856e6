import numpy as np
import pytest

from pushbench.learn import (
    AdamState,
    Checkpoint,
    DiffusionSpec,
    MlpSpec,
    Standardiser,
    TrainConfig,
    adam_step,
    ddpm_sample,
    ddpm_train,
    init_mlp,
    mlp_forward,
    mlp_loss_and_grad,
    noise_schedule,
    train_mlp,
)
from pushbench.learn.fused import FusedMlpTrainer
from pushbench.spaces import SpaceSpec


def finite_difference_grads(loss_fn, params, h=1e-5):
    grads = []
    for p in params:
        g = np.zeros_like(p)
        flat = p.ravel()
        gflat = g.ravel()
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + h
            lp = loss_fn()
            flat[j] = orig - h
            lm = loss_fn()
            flat[j] = orig
            gflat[j] = (lp - lm) / (2 * h)
        grads.append(g)
    return grads


def max_rel_error(analytic, numeric):
    worst = 0.0
    for a, n in zip(analytic, numeric):
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-6)
        worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst


class TestMlpForward:
    def test_zero_weights_zero_output(self):
        spec = MlpSpec(input_dim=3, output_dim=2, hidden_layers=2, hidden_dim=4)
        params = [np.zeros_like(p) for p in init_mlp(spec, np.random.default_rng(0))]
        out = mlp_forward(params, np.ones(3))
        assert np.array_equal(out, np.zeros(2))

    def test_identity_single_layer(self):
        params = [np.eye(3), np.zeros(3)]
        x = np.array([0.3, -1.2, 4.0])
        assert np.allclose(mlp_forward(params, x), x)

    def test_eval_mode_deterministic(self):
        spec = MlpSpec(input_dim=5, output_dim=3, hidden_layers=3, hidden_dim=16, dropout_p=0.5)
        params = init_mlp(spec, np.random.default_rng(1))
        x = np.random.default_rng(2).standard_normal(5)
        a = mlp_forward(params, x, train_mode=False, dropout_p=spec.dropout_p)
        b = mlp_forward(params, x, train_mode=False, dropout_p=spec.dropout_p)
        assert np.array_equal(a, b)

    def test_dimension_mismatch(self):
        params = [np.eye(3), np.zeros(3)]
        with pytest.raises(ValueError):
            mlp_forward(params, np.ones(4))


class TestGradients:
    def test_gradient_at_minimum_is_zero(self):
        # 1-input 1-output linear net fitted exactly: y = 2x
        params = [np.array([[2.0]]), np.array([0.0])]
        x = np.linspace(-1, 1, 7)[:, None]
        y = 2.0 * x
        loss, grads = mlp_loss_and_grad(params, x, y)
        assert loss < 1e-20
        assert all(np.max(np.abs(g)) <= 1e-10 for g in grads)

    def test_fd_oracle_20_random_nets_mse(self):
        rng = np.random.default_rng(10)
        worst = 0.0
        for _ in range(20):
            spec = MlpSpec(
                input_dim=int(rng.integers(2, 5)),
                output_dim=int(rng.integers(1, 4)),
                hidden_layers=int(rng.integers(1, 3)),
                hidden_dim=int(rng.integers(3, 6)),
                dropout_p=0.0,
                l2_weight=float(rng.uniform(0, 1e-3)),
            )
            params = init_mlp(spec, rng)
            x = rng.standard_normal((6, spec.input_dim))
            y = rng.standard_normal((6, spec.output_dim))
            _, grads = mlp_loss_and_grad(params, x, y, l2_weight=spec.l2_weight)
            fd = finite_difference_grads(
                lambda: mlp_loss_and_grad(params, x, y, l2_weight=spec.l2_weight)[0], params
            )
            worst = max(worst, max_rel_error(grads, fd))
        assert worst <= 1e-4

    def test_fd_oracle_with_fixed_dropout_masks(self):
        rng = np.random.default_rng(11)
        spec = MlpSpec(input_dim=3, output_dim=2, hidden_layers=2, hidden_dim=4, dropout_p=0.3)
        params = init_mlp(spec, rng)
        x = rng.standard_normal((5, 3))
        y = rng.standard_normal((5, 2))
        masks = [rng.random((5, 4)) >= spec.dropout_p for _ in range(2)]
        _, grads = mlp_loss_and_grad(
            params, x, y, dropout_p=spec.dropout_p, dropout_masks=masks
        )
        fd = finite_difference_grads(
            lambda: mlp_loss_and_grad(params, x, y, dropout_p=spec.dropout_p, dropout_masks=masks)[0],
            params,
        )
        assert max_rel_error(grads, fd) <= 1e-4

    def test_l2_gradient_scales_linearly(self):
        rng = np.random.default_rng(12)
        spec = MlpSpec(input_dim=3, output_dim=2, hidden_layers=1, hidden_dim=4, dropout_p=0.0)
        params = init_mlp(spec, rng)
        x = rng.standard_normal((4, 3))
        y = rng.standard_normal((4, 2))
        _, g0 = mlp_loss_and_grad(params, x, y, l2_weight=0.0)
        _, g1 = mlp_loss_and_grad(params, x, y, l2_weight=1e-3)
        _, g2 = mlp_loss_and_grad(params, x, y, l2_weight=2e-3)
        for a, b, c in zip(g0, g1, g2):
            assert np.allclose(c - a, 2.0 * (b - a), atol=1e-12)

    def test_nonfinite_loss_raises(self):
        params = [np.array([[1e308]]), np.array([1e308])]
        with pytest.raises(FloatingPointError):
            mlp_loss_and_grad(params, np.array([[1e10]]), np.array([[0.0]]))

    def test_fused_path_matches_reference(self):
        rng1 = np.random.default_rng(13)
        rng2 = np.random.default_rng(13)
        spec = MlpSpec(input_dim=4, output_dim=3, hidden_layers=2, hidden_dim=8, dropout_p=0.1, l2_weight=1e-4)
        p1 = init_mlp(spec, rng1)
        p2 = init_mlp(spec, rng2)
        trainer = FusedMlpTrainer(spec, p2, dtype=np.float64)
        x = np.random.default_rng(1).standard_normal((16, 4))
        y = np.random.default_rng(2).standard_normal((16, 3))
        l_ref, g_ref = mlp_loss_and_grad(
            p1, x, y, l2_weight=spec.l2_weight, dropout_p=spec.dropout_p, rng=rng1
        )
        l_fused = trainer.loss_and_grad(x, y, rng2)
        assert l_fused == pytest.approx(l_ref, rel=1e-12)
        for a, b in zip(g_ref, trainer.grads):
            assert np.allclose(a, b, atol=1e-12)


class TestAdam:
    def test_zero_gradient_no_motion(self):
        params = [np.array([1.0, -2.0])]
        state = AdamState.for_params(params)
        out, state = adam_step(state, params, [np.zeros(2)], lr=0.1)
        assert np.array_equal(out[0], [1.0, -2.0])
        assert state.step == 1

    def test_first_step_hand_computed(self):
        # m1 = 0.1g, v1 = 0.001g^2; with bias correction the first update is
        # -lr * g / (|g| + eps) elementwise
        g = np.array([0.5, -3.0])
        params = [np.array([1.0, 1.0])]
        state = AdamState.for_params(params)
        lr = 0.01
        out, _ = adam_step(state, params, [g.copy()], lr)
        expected = 1.0 - lr * g / (np.abs(g) + 1e-8)
        assert np.allclose(out[0], expected, atol=1e-12)

    def test_resume_equals_continuous(self):
        rng = np.random.default_rng(14)
        g1, g2 = rng.standard_normal(3), rng.standard_normal(3)
        pa = [rng.standard_normal(3)]
        pb = [pa[0].copy()]
        sa = AdamState.for_params(pa)
        adam_step(sa, pa, [g1], 0.05)
        adam_step(sa, pa, [g2], 0.05)
        sb = AdamState.for_params(pb)
        adam_step(sb, pb, [g1], 0.05)
        snap = sb.clone()
        pb2 = [pb[0].copy()]
        adam_step(snap, pb2, [g2], 0.05)
        assert np.array_equal(pa[0], pb2[0])


class TestStandardiser:
    def test_roundtrip(self):
        rng = np.random.default_rng(15)
        x = rng.standard_normal((100, 7)) * 40 + 3
        st = Standardiser.fit(x)
        assert np.max(np.abs(st.inverse(st.transform(x)) - x)) < 1e-9

    def test_std_floor(self):
        x = np.ones((10, 2))
        st = Standardiser.fit(x)
        assert np.all(st.std >= 1e-8)

    def test_transform_stats(self):
        rng = np.random.default_rng(16)
        x = rng.standard_normal((1000, 3)) * [5, 0.1, 100]
        z = Standardiser.fit(x).transform(x)
        assert np.allclose(z.mean(axis=0), 0, atol=1e-9)
        assert np.allclose(z.std(axis=0), 1, atol=1e-6)


class TestDropoutExpectation:
    def test_inverted_scaling_preserves_mean(self):
        # E[dropout(h)] == h within Monte-Carlo error
        rng = np.random.default_rng(17)
        spec = MlpSpec(input_dim=4, output_dim=3, hidden_layers=1, hidden_dim=32, dropout_p=0.2)
        params = init_mlp(spec, rng)
        x = rng.standard_normal(4)
        ref = mlp_forward(params, x, train_mode=False, dropout_p=spec.dropout_p)
        n = 10_000
        acc = np.zeros(3)
        for _ in range(n):
            acc += mlp_forward(params, x, train_mode=True, rng=rng, dropout_p=spec.dropout_p)
        mc = acc / n
        # 3 sigma of the Monte-Carlo mean, estimated loosely from the spread
        sigma = 3 * np.abs(ref).max() / np.sqrt(n) * 3
        assert np.max(np.abs(mc - ref)) < max(sigma, 0.05)


class TestTrainMlp:
    def test_fits_linear_map(self):
        rng = np.random.default_rng(18)
        X = rng.standard_normal((500, 3))
        W = np.array([[1.0, -2.0], [0.5, 0.0], [3.0, 1.0]])
        Y = X @ W
        ck = train_mlp(
            X,
            Y,
            SpaceSpec(kind="p"),
            TrainConfig(learning_rate=1e-3, batch_size=128, epochs=150, seed=0),
            hidden_layers=2,
            hidden_dim=64,
            dropout_p=0.0,
            l2_weight=0.0,
        )
        pred = ck.y_standardiser.inverse(
            mlp_forward(ck, ck.x_standardiser.transform(X), train_mode=False)
        )
        assert float(np.mean((pred - Y) ** 2)) < 0.01

    def test_bit_identical_reruns(self):
        rng = np.random.default_rng(19)
        X = rng.standard_normal((200, 4))
        Y = rng.standard_normal((200, 2))
        cfg = TrainConfig(learning_rate=1e-3, batch_size=64, epochs=5, seed=3)
        a = train_mlp(X, Y, SpaceSpec(kind="p"), cfg, hidden_layers=2, hidden_dim=32)
        b = train_mlp(X, Y, SpaceSpec(kind="p"), cfg, hidden_layers=2, hidden_dim=32)
        assert all(np.array_equal(p, q) for p, q in zip(a.params, b.params))
        assert np.array_equal(a.loss_curve, b.loss_curve)


class TestCheckpointIO:
    def test_roundtrip_and_deterministic_bytes(self, tmp_path):
        rng = np.random.default_rng(20)
        X = rng.standard_normal((50, 4))
        Y = rng.standard_normal((50, 2))
        ck = train_mlp(
            X, Y, SpaceSpec(kind="p"), TrainConfig(epochs=2, batch_size=32, seed=0),
            hidden_layers=1, hidden_dim=8,
        )
        p1 = tmp_path / "a.ckpt"
        p2 = tmp_path / "b.ckpt"
        ck.save(p1)
        ck.save(p2)
        assert p1.read_bytes() == p2.read_bytes()
        loaded = Checkpoint.load(p1)
        assert loaded.kind == "mlp"
        assert loaded.space == ck.space
        # stored as float32
        for orig, back in zip(ck.params, loaded.params):
            assert np.array_equal(orig.astype(np.float32).astype(np.float64), back)
        assert (tmp_path / "a.ckpt.loss.csv").exists()


class TestDiffusion:
    def test_schedule_terminal_noise(self):
        spec = DiffusionSpec()
        betas, alphas, abar = noise_schedule(spec)
        assert len(betas) == spec.denoise_steps
        assert np.all((0 < betas) & (betas < 1))
        assert np.all(np.diff(betas) > 0)
        assert abar[-1] < 0.01  # closed-form product: near-pure noise at N

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            DiffusionSpec(exec_horizon=20, pred_horizon=16)
        with pytest.raises(ValueError):
            DiffusionSpec(beta_start=0.2, beta_end=0.1)

    def test_paper_horizons(self):
        spec = DiffusionSpec()
        assert spec.obs_horizon == 2
        assert spec.pred_horizon == 16
        assert spec.exec_horizon == 8

    @pytest.fixture(scope="class")
    def constant_ckpt(self):
        # degenerate dataset: one constant action sequence, no padding
        rng = np.random.default_rng(21)
        n = 256
        const = np.array([3.0, -1.5])
        obs = rng.standard_normal((n, 4))
        actions = np.tile(const, (n, 16, 1))
        valid = np.ones((n, 16), dtype=bool)
        spec = DiffusionSpec(hidden_layers=2, hidden_dim=64)
        cfg = TrainConfig(learning_rate=1e-3, batch_size=64, epochs=120, seed=0)
        ck = ddpm_train(obs, actions, valid, SpaceSpec(kind="p", obs_horizon=2), spec, cfg)
        return ck, const, obs

    def test_constant_dataset_converges(self, constant_ckpt):
        ck, _, _ = constant_ckpt
        curve = ck.loss_curve
        assert curve[-1] < 0.1
        # epoch averages trend down after warmup
        later = curve[10:]
        chunks = np.array_split(later, 4)
        means = [float(np.mean(c)) for c in chunks]
        assert all(means[i + 1] <= means[i] + 0.02 for i in range(len(means) - 1))

    def test_initial_loss_near_unit(self):
        rng = np.random.default_rng(22)
        n = 512
        obs = rng.standard_normal((n, 4))
        actions = rng.standard_normal((n, 16, 2))
        valid = np.ones((n, 16), dtype=bool)
        spec = DiffusionSpec(hidden_layers=2, hidden_dim=32)
        cfg = TrainConfig(learning_rate=1e-3, batch_size=256, epochs=1, seed=0)
        ck = ddpm_train(obs, actions, valid, SpaceSpec(kind="p", obs_horizon=2), spec, cfg)
        assert ck.loss_curve[0] == pytest.approx(1.0, abs=0.2)

    def test_samples_near_constant(self, constant_ckpt):
        ck, const, obs = constant_ckpt
        std = ck.y_standardiser.std
        for i in range(10):
            seq = ddpm_sample(ck, obs[i], np.random.default_rng(100 + i))
            assert seq.shape == (16, 2)
            err = np.abs(seq - const)  # de-standardised units
            assert np.all(err <= 0.05 * std + 1e-9)

    def test_sampling_deterministic_given_rng(self, constant_ckpt):
        ck, _, obs = constant_ckpt
        a = ddpm_sample(ck, obs[0], np.random.default_rng(5))
        b = ddpm_sample(ck, obs[0], np.random.default_rng(5))
        assert np.array_equal(a, b)

    def test_sample_shape_generic(self):
        rng = np.random.default_rng(23)
        obs = rng.standard_normal((8, 4))
        actions = rng.standard_normal((8, 16, 2))
        valid = np.ones((8, 16), dtype=bool)
        spec = DiffusionSpec(hidden_layers=1, hidden_dim=16)
        ck = ddpm_train(
            obs, actions, valid, SpaceSpec(kind="p", obs_horizon=2), spec,
            TrainConfig(epochs=1, batch_size=8, seed=0),
        )
        seq = ddpm_sample(ck, obs[0], np.random.default_rng(0))
        assert seq.shape == (16, 2)

    def test_training_determinism(self):
        rng = np.random.default_rng(24)
        obs = rng.standard_normal((32, 4))
        actions = rng.standard_normal((32, 16, 2))
        valid = np.ones((32, 16), dtype=bool)
        spec = DiffusionSpec(hidden_layers=1, hidden_dim=16)
        cfg = TrainConfig(epochs=3, batch_size=16, seed=9)
        space = SpaceSpec(kind="p", obs_horizon=2)
        a = ddpm_train(obs, actions, valid, space, spec, cfg)
        b = ddpm_train(obs, actions, valid, space, spec, cfg)
        assert all(np.array_equal(p, q) for p, q in zip(a.params, b.params))
