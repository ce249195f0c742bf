import pytest

from pottscolor.graph import Graph, generate_planted
from pottscolor.model import ArchSpec, init_params


@pytest.fixture
def triangle():
    return Graph(3, [(0, 1), (1, 2), (0, 2)])


@pytest.fixture
def small_planted():
    return generate_planted(30, 4.0, 3, seed=11)


@pytest.fixture
def tiny_model():
    return init_params(ArchSpec(n_layers=2, latent_dim=8, q=3, input_dim=4), seed=5)


def random_graph(n, m, rng):
    pairs = set()
    while len(pairs) < m:
        i, j = sorted(rng.integers(0, n, 2).tolist())
        if i != j:
            pairs.add((i, j))
    return Graph(n, sorted(pairs))
