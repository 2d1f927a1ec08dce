from pathlib import Path

import numpy as np
import pytest

import spreadcomm as sc

REPO_ROOT = Path(__file__).resolve().parent.parent
DATA_DIR = REPO_ROOT / "data"


@pytest.fixture(scope="session")
def karate():
    return sc.parse_gml((DATA_DIR / "karate.gml").read_text())


@pytest.fixture(scope="session")
def fig3():
    """12 vertices in 4 planted angle clusters, well separated.

    Generated with the sharpened link so contacts stay mostly within
    clusters; moderate impulse count keeps the binary graph from saturating
    with cross-cluster edges.
    """
    state, labels = sc.clustered_state([3, 3, 3, 3])
    gen_cfg = sc.ModelConfig(sharpness_k=6)
    rng = np.random.default_rng(1)
    g = sc.synthesize_network(state, 40, "sequential", gen_cfg, rng,
                              T=3, output_mode="binary")
    return g, labels


@pytest.fixture(scope="session")
def two_cliques():
    adj = np.zeros((12, 12), dtype=int)
    for base in (0, 6):
        for i in range(6):
            for j in range(i + 1, 6):
                adj[base + i, base + j] = adj[base + j, base + i] = 1
    return sc.Graph(adj)
