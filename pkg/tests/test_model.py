import struct

import numpy as np
import pytest

from pottscolor import diffcore as dc
from pottscolor.graph import Graph, degree_feature, generate_er
from pottscolor.model import (
    AGGREGATIONS, CHECKPOINT_MAGIC, REFERENCE_PARAM_TABLE, REFERENCE_PARAM_TOTAL, ArchSpec,
    CheckpointError, checkpoint_bytes, count_params, forward, init_params, load_checkpoint,
    parse_checkpoint, save_checkpoint,
)


def features(g, q, seed):
    x = np.random.default_rng(seed).standard_normal((g.n_nodes, q))
    return np.concatenate([x, degree_feature(g)[:, None]], axis=1)


@pytest.mark.parametrize("aggregation", AGGREGATIONS)
def test_permutation_equivariance(aggregation):
    arch = ArchSpec(n_layers=3, latent_dim=8, q=4, input_dim=5, aggregation=aggregation)
    p = init_params(arch, seed=1)
    g = generate_er(40, 4.0, seed=2)
    x0 = features(g, 4, 3)
    perm = np.random.default_rng(4).permutation(40)
    h = g.relabel(perm)
    x_perm = np.empty_like(x0)
    x_perm[perm] = x0
    y = forward(g, x0, p)
    y_perm = forward(h, x_perm, p)
    np.testing.assert_allclose(y_perm[perm], y, atol=1e-12, rtol=0)


def test_output_row_stochastic(tiny_model):
    g = generate_er(25, 3.0, seed=0)
    y = forward(g, features(g, 3, 0), tiny_model)
    assert y.shape == (25, 3)
    assert np.all(y >= 0)
    np.testing.assert_allclose(y.sum(axis=1), 1.0, atol=1e-12)


def test_isolated_nodes_and_edgeless_graph(tiny_model):
    g = Graph(4, [])
    y = forward(g, features(g, 3, 0), tiny_model)
    assert np.all(np.isfinite(y))


def test_input_shape_checked(tiny_model):
    g = generate_er(10, 2.0, seed=0)
    with pytest.raises(ValueError):
        forward(g, np.zeros((10, 3)), tiny_model)


def test_forward_with_tape_matches_plain(tiny_model):
    g = generate_er(15, 3.0, seed=1)
    x0 = features(g, 3, 1)
    tape = dc.Tape()
    y = forward(g, x0, tiny_model, tape)
    np.testing.assert_array_equal(y.value, forward(g, x0, tiny_model))
    assert len(tape.params) == len(tiny_model.arrays())


def test_init_variance():
    arch = ArchSpec(n_layers=2, latent_dim=64, q=5, input_dim=6)
    p = init_params(arch, seed=0)
    for (name, out, inp), (W, b) in zip(arch.layer_shapes(), p.weights):
        if W.size < 1000:
            continue
        assert np.var(W) == pytest.approx(1.0 / (3.0 * inp), rel=0.2), name
        assert np.all(np.abs(W) <= 1.0 / np.sqrt(inp))
        assert np.all(b == 0)


def test_init_deterministic():
    arch = ArchSpec(n_layers=2, latent_dim=8, q=3, input_dim=4)
    a, b = init_params(arch, 7), init_params(arch, 7)
    assert all(np.array_equal(x, y) for x, y in zip(a.arrays(), b.arrays()))
    c = init_params(arch, 8)
    assert not np.array_equal(a.arrays()[0], c.arrays()[0])


def test_count_params_formula():
    # a single 32 -> 27 affine map holds 27 * 33 = 891 parameters
    arch = ArchSpec(n_layers=1, latent_dim=4, q=27, input_dim=28, mlp_hidden=(4, 4, 32))
    rows = dict(count_params(arch)[0])
    assert rows["readout"] == 32 * (28 + 4 + 1) + 891
    arch = ArchSpec(n_layers=5, latent_dim=32, q=5, input_dim=6)
    rows, total = count_params(arch)
    d = 32
    expected = {"phi1": d * 13 + d * 33, "gamma1": d * 39 + d * 33, "phi2": d * 65 + d * 33,
                "gamma2": d * 65 + d * 33, "readout": d * (6 + 5 * d + 1) + 5 * 33}
    got = dict(rows)
    for k, v in expected.items():
        assert got[k] == v
    assert total == sum(got.values()) == init_params(arch, 0).total_params


def test_reference_table_consistent():
    assert sum(REFERENCE_PARAM_TABLE.values()) == REFERENCE_PARAM_TOTAL


def test_arch_validation():
    with pytest.raises(ValueError):
        ArchSpec(aggregation="median")
    with pytest.raises(ValueError):
        ArchSpec(mlp_hidden=(4, 4))
    assert ArchSpec(latent_dim=7, mlp_hidden=(9,)).mlp_hidden == (9, 9, 9)


def test_checkpoint_roundtrip(tmp_path):
    arch = ArchSpec(n_layers=2, latent_dim=6, q=3, input_dim=4, mlp_hidden=(5, 7, 9), aggregation="max")
    p = init_params(arch, seed=3)
    path = tmp_path / "m.pgc"
    save_checkpoint(p, path)
    back = load_checkpoint(path)
    assert back.arch == arch and back.seed == 3
    for a, b in zip(p.arrays(), back.arrays()):
        assert a.tobytes() == b.tobytes()
    assert checkpoint_bytes(back) == path.read_bytes()


def test_checkpoint_errors(tiny_model):
    data = checkpoint_bytes(tiny_model)
    assert data[:4] == CHECKPOINT_MAGIC
    with pytest.raises(CheckpointError, match="magic"):
        parse_checkpoint(b"XXXX" + data[4:])
    with pytest.raises(CheckpointError, match="version"):
        parse_checkpoint(data[:4] + struct.pack("<I", 99) + data[8:])
    with pytest.raises(CheckpointError):
        parse_checkpoint(data[:-3])
    with pytest.raises(CheckpointError):
        parse_checkpoint(data + b"\0")
    with pytest.raises(CheckpointError):
        parse_checkpoint(b"")
