import numpy as np
import pytest

from cmcs.embed_init import deterministic_init
from cmcs.graph_store import split_edges
from cmcs.harness import synthetic
from cmcs.tref.train import TrainConfig, train


@pytest.fixture(scope="session")
def syn_graph():
    return synthetic.trust_graph(1500, 12000, seed=0)


@pytest.fixture(scope="session")
def syn_split(syn_graph):
    return split_edges(syn_graph, 0.8, 0)


@pytest.fixture(scope="session")
def syn_fitted(syn_graph, syn_split):
    """Small trust model on the synthetic graph, shared by scenario and acceptance tests."""
    emb = deterministic_init(syn_graph, 32, 0)
    return train(syn_graph, syn_split, emb, TrainConfig(epochs=60, layers=(32, 32), seed=0))


@pytest.fixture(scope="session")
def syn_checkins():
    return synthetic.checkins(3000, seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)



@pytest.fixture(scope="session")
def syn_regions(syn_checkins):
    from cmcs.region_partition import partition

    return partition(syn_checkins.points(), k=30, batch=3100, seed=0)[0]


@pytest.fixture(scope="session")
def syn_scenario(syn_graph, syn_fitted, syn_checkins, syn_regions):
    """Six regions of 200 workers with one task each."""
    from cmcs.harness.scenario import ScenarioParams, build_scenario

    return build_scenario(syn_graph, syn_fitted, syn_checkins, syn_regions, ScenarioParams(), seed=0)


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE

    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
