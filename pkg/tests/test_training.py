import numpy as np
import pytest

from pottscolor.graph import degree_feature, generate_er, generate_planted, write_graph
from pottscolor.model import ArchSpec, init_params, forward
from pottscolor.potts import LossWeights, loss_terms, one_hot
from pottscolor.training import (
    AdamState, TrainConfig, TrainingError, adam_step, corrupt, graph_loss_and_grad, loss_lower_bound,
    read_manifest, read_train_log, split_dataset, train, write_manifest, write_train_log,
)

ARCH = ArchSpec(n_layers=2, latent_dim=8, q=3, input_dim=4)


def planted_set(k, n=24, c=3.0, q=3):
    return [generate_planted(n, c, q, seed=100 + i)[0] for i in range(k)]


def test_corrupt_limits():
    xi = one_hot([0, 1, 2, 1], 3)
    deg = np.array([1.0, 2.0, 0.5, 0.0])
    out = corrupt(xi, deg, 1.0, seed=0)
    np.testing.assert_array_equal(out[:, :3], xi)
    np.testing.assert_array_equal(out[:, 3], deg)
    with pytest.raises(ValueError):
        corrupt(xi, deg, 1.5, seed=0)


def test_corrupt_pure_noise_moments():
    xi = np.zeros((20000, 5))
    x = corrupt(xi, np.zeros(20000), 0.0, seed=1)[:, :5]
    assert abs(x.mean()) < 0.02
    assert x.var() == pytest.approx(1.0, rel=0.02)


def test_corrupt_mean():
    xi = one_hot([0, 2], 3)
    alpha = 0.49
    draws = np.stack([corrupt(xi, np.zeros(2), alpha, np.random.default_rng(k))[:, :3] for k in range(10000)])
    se = np.sqrt(1 - alpha) / np.sqrt(10000)
    assert np.all(np.abs(draws.mean(0) - np.sqrt(alpha) * xi) < 3 * se + 1e-12)


def test_corrupt_deterministic_per_seed():
    xi = one_hot([0, 1], 2)
    np.testing.assert_array_equal(corrupt(xi, np.ones(2), 0.5, 7), corrupt(xi, np.ones(2), 0.5, 7))


def test_adam_zero_gradient_keeps_params():
    p = init_params(ARCH, 0)
    st = AdamState.zeros_like(p)
    q, st2 = adam_step(p, [np.zeros_like(a) for a in p.arrays()], st, TrainConfig())
    assert all(np.array_equal(a, b) for a, b in zip(p.arrays(), q.arrays()))
    assert st2.t == 1


def test_adam_single_step_oracle():
    # f(w) = w^2 at w = 1: bias-corrected m/sqrt(v) = 1, so w moves by lr
    arch = ArchSpec(n_layers=1, latent_dim=1, q=1, input_dim=1, mlp_hidden=(1,))
    p = init_params(arch, 0)
    arrays = [np.ones_like(a) for a in p.arrays()]
    p = p.with_arrays(arrays)
    grads = [2.0 * a for a in arrays]
    cfg = TrainConfig(learning_rate=0.1)
    q, _ = adam_step(p, grads, AdamState.zeros_like(p), cfg)
    for a in q.arrays():
        np.testing.assert_allclose(a, 1.0 - 0.1, atol=1e-7)


def test_adam_rejects_nan():
    p = init_params(ARCH, 0)
    grads = [np.zeros_like(a) for a in p.arrays()]
    grads[3][0] = np.nan
    with pytest.raises(TrainingError):
        adam_step(p, grads, AdamState.zeros_like(p), TrainConfig())


def test_composite_gradient_matches_finite_differences():
    g, planted = generate_planted(15, 3.0, 3, seed=2)
    p = init_params(ARCH, 1)
    xi = one_hot(planted.colors, 3)
    x0 = corrupt(xi, degree_feature(g), 0.6, seed=3)
    w = LossWeights(0.5, 0.05, entropy_sign=1)
    _, grads = graph_loss_and_grad(g, x0, xi, p, w)
    arrays = p.arrays()
    rng = np.random.default_rng(0)
    h = 1e-6
    for _ in range(20):
        k = int(rng.integers(len(arrays)))
        idx = tuple(int(rng.integers(s)) for s in arrays[k].shape)
        vals = []
        for sgn in (1, -1):
            mod = [a.copy() for a in arrays]
            mod[k][idx] += sgn * h
            vals.append(loss_terms(g, forward(g, x0, p.with_arrays(mod)), xi, w)["loss"])
        num = (vals[0] - vals[1]) / (2 * h)
        assert abs(num - grads[k][idx]) <= 1e-5 * max(1e-3, abs(num))


def test_weights_warmup():
    cfg = TrainConfig(warmup_epochs_eta1=2, warmup_epochs_eta2=1)
    assert cfg.weights_at(0).eta1 == 0.5 and cfg.weights_at(0).eta2 == 0.05
    assert cfg.weights_at(1).eta1 == 0.5 and cfg.weights_at(1).eta2 == 0.0
    assert cfg.weights_at(2).eta1 == 0.0
    assert TrainConfig().weights_at(100).eta1 == 0.5


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(alpha_min=0.9, alpha_max=0.4)
    with pytest.raises(ValueError):
        TrainConfig(batch_size=0)


def test_loss_lower_bound():
    g = generate_er(10, 2.0, seed=0)
    assert loss_lower_bound(g, 4, LossWeights(0.5, 0.05)) == pytest.approx(-0.5 * 10 * 2 - 0.05)
    assert loss_lower_bound(g, 4, LossWeights(0.5, 0.05, -1)) == pytest.approx(-0.05)


def test_split_disjoint():
    tr, va = split_dataset(50, 0.1, seed=3)
    assert len(va) == 5 and len(tr) == 45
    assert not set(tr) & set(va)
    assert sorted(np.concatenate([tr, va]).tolist()) == list(range(50))


def test_smoke_single_graph_no_weights():
    graphs = planted_set(1)
    cfg = TrainConfig(epochs=1, batch_size=1, eta1=0.0, eta2=0.0, val_fraction=0.0)
    p0 = init_params(ARCH, cfg.seed)
    g = graphs[0]
    xi = one_hot(g.planted.colors, 3)
    _, grads = graph_loss_and_grad(g, corrupt(xi, degree_feature(g), 0.6, 0), xi, p0, cfg.weights_at(0))
    assert sum(float(np.sum(a * a)) for a in grads) > 0
    res = train(cfg, ARCH, graphs)
    assert res.last("train") is not None and res.last("val") is None
    assert any(not np.array_equal(a, b) for a, b in zip(p0.arrays(), res.params.arrays()))


def test_training_reduces_energy():
    graphs = planted_set(12)
    cfg = TrainConfig(epochs=15, batch_size=4, learning_rate=3e-3, normalize_entropy=True,
                      warmup_epochs_eta1=1, seed=1)
    res = train(cfg, ARCH, graphs)
    train_rows = [r for r in res.log if r["split"] == "train"]
    assert train_rows[-1]["h"] < train_rows[0]["h"]
    assert len(res.val_indices) == 1


def test_training_deterministic():
    graphs = planted_set(6)
    cfg = TrainConfig(epochs=2, batch_size=3, seed=4)
    a = train(cfg, ARCH, graphs)
    b = train(cfg, ARCH, graphs)
    assert all(x.tobytes() == y.tobytes() for x, y in zip(a.params.arrays(), b.params.arrays()))
    assert a.log == b.log


def test_training_errors():
    with pytest.raises(TrainingError):
        train(TrainConfig(epochs=1), ARCH, [])
    with pytest.raises(TrainingError):
        train(TrainConfig(epochs=1), ARCH, [generate_er(10, 2.0, 0)])
    with pytest.raises(TrainingError):
        train(TrainConfig(epochs=1), ARCH, planted_set(2, q=4))
    with pytest.raises(TrainingError):
        train(TrainConfig(epochs=1), ARCH)


def test_manifest_and_log_roundtrip(tmp_path):
    graphs = planted_set(3)
    paths = []
    for k, g in enumerate(graphs):
        paths.append(tmp_path / f"g{k}.txt")
        write_graph(g, paths[-1])
    write_manifest(paths, tmp_path / "manifest.txt")
    assert read_manifest(tmp_path / "manifest.txt") == paths
    cfg = TrainConfig(epochs=2, batch_size=2, manifest=str(tmp_path / "manifest.txt"), val_fraction=0.34)
    res = train(cfg, ARCH)
    write_train_log(res.log, tmp_path / "log.csv")
    assert read_train_log(tmp_path / "log.csv") == res.log
