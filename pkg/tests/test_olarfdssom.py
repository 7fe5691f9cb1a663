import math

import numpy as np
import pytest

from Errors import DimensionMismatchError, EmptyMapError, InputValidationError
from Metrics import evaluate
from ModelConfig import OlarfdssomConfig
from Olarfdssom import (
    Olarfdssom,
    SomMap,
    SomNode,
    adapt,
    cluster,
    maybe_prune,
    relevance_from_delta,
    som_activation,
    som_find_winner,
    train,
    update_connections,
    weighted_distance,
)


def make_node(node_id, center, relevance=None, wins=0.0):
    center = np.array(center, dtype=float)
    relevance = np.ones_like(center) if relevance is None else np.array(relevance, dtype=float)
    return SomNode(node_id, center, np.zeros_like(center), relevance, wins)


def test_weighted_distance_zero_at_center():
    node = make_node(0, [0.2, 0.4], relevance=[0.3, 0.9])
    assert weighted_distance([0.2, 0.4], node) == 0.0


def test_weighted_distance_ignores_irrelevant_subspace():
    node = make_node(0, [0.0, 0.0], relevance=[0.0, 0.0])
    assert weighted_distance([1.0, 1.0], node) == 0.0


def test_weighted_distance_single_component():
    node = make_node(0, [0.0, 0.0], relevance=[0.25, 1.0])
    assert weighted_distance([1.0, 0.0], node) == pytest.approx(0.5)


def test_weighted_distance_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        weighted_distance([1.0, 0.0, 0.0], make_node(0, [0.0, 0.0]))


def test_activation_near_one_at_center():
    node = make_node(0, np.full(18, 0.5))
    assert som_activation(np.full(18, 0.5), node, 1e-9) == pytest.approx(1.0, abs=1e-9)


def test_activation_of_irrelevant_node_is_zero():
    node = make_node(0, [0.0, 0.0], relevance=[0.0, 0.0])
    assert som_activation([1.0, 0.0], node, 1e-9) == 0.0


def test_activation_half_when_distance_equals_relevance_sum():
    node = make_node(0, [0.0, 0.0])
    x = [math.sqrt(2.0), math.sqrt(2.0)]
    assert som_activation(x, node, 1e-12) == pytest.approx(0.5)


def test_activation_decreases_with_distance():
    node = make_node(0, np.zeros(4), relevance=[0.2, 0.5, 0.9, 1.0])
    activations = [som_activation(np.full(4, d), node, 1e-9) for d in np.linspace(0.0, 1.0, 11)]
    assert all(a > b for a, b in zip(activations, activations[1:]))


def test_find_winner_single_node():
    som = SomMap(nodes=[make_node(4, [0.1, 0.1])])
    assert som_find_winner(som, [0.9, 0.9])[0] == 4


def test_find_winner_matching_center():
    som = SomMap(nodes=[make_node(0, [0.9, 0.0, 0.0]), make_node(1, [0.0, 0.9, 0.0]), make_node(2, [0.0, 0.0, 0.9])])
    winner, activation = som_find_winner(som, [0.0, 0.9, 0.0])
    assert winner == 1
    assert activation == pytest.approx(1.0, abs=1e-9)


def test_find_winner_tie_goes_to_lowest_id():
    som = SomMap(nodes=[make_node(2, [0.5, 0.5]), make_node(5, [0.5, 0.5])])
    assert som_find_winner(som, [0.1, 0.3])[0] == 2


def test_find_winner_empty_map():
    with pytest.raises(EmptyMapError, match="no categories learned yet"):
        som_find_winner(SomMap(), [0.5])


def test_adapt_full_rate_sets_delta_to_distance():
    cfg = OlarfdssomConfig(relevance_rate=0.999999, winner_rate=0.999999, neighbor_rate=0.5)
    som = SomMap(nodes=[make_node(0, [0.0, 0.0])])
    adapt(som, 0, [0.4, 0.0], cfg)
    assert som.nodes[0].delta.tolist() == pytest.approx([0.4, 0.0], abs=1e-5)
    assert som.nodes[0].wins == 1


def test_adapt_at_fixed_point_keeps_uniform_relevance(som_config):
    som = SomMap(nodes=[make_node(0, [0.3, 0.6, 0.9])])
    for _ in range(20):
        adapt(som, 0, [0.3, 0.6, 0.9], som_config)
    node = som.nodes[0]
    assert node.delta.tolist() == [0.0, 0.0, 0.0]
    assert node.relevance.tolist() == [1.0, 1.0, 1.0]
    assert node.wins == 20


def test_relevance_ramp_values():
    omega = relevance_from_delta(np.array([0.4, 0.0]), 0.0781)
    assert omega[0] == pytest.approx(1.0 / (1.0 + math.exp(0.2 / (0.0781 * 0.4))), rel=1e-9)
    assert omega[0] == pytest.approx(0.00166, abs=1e-5)
    assert omega[1] == pytest.approx(0.99834, abs=1e-5)


def test_adapt_moves_neighbors_at_their_own_rate(som_config):
    som = SomMap(nodes=[make_node(0, [0.0, 0.0]), make_node(1, [0.0, 0.0]), make_node(2, [0.0, 0.0])])
    som.connections = {(0, 1)}
    adapt(som, 0, [1.0, 1.0], som_config)
    assert som.node(0).center[0] == pytest.approx(som_config.winner_rate)
    assert som.node(1).center[0] == pytest.approx(som_config.neighbor_rate)
    assert som.node(2).center[0] == 0.0
    assert som.node(1).wins == 0


def test_prune_threshold_boundary(som_config):
    assert som_config.prune_threshold == pytest.approx(6.5076)
    som = SomMap(nodes=[make_node(0, [0.1], wins=7), make_node(1, [0.9], wins=6)], nwins=34)
    removed = maybe_prune(som, som_config)
    assert removed == [1]
    assert [n.id for n in som.nodes] == [0]
    assert som.nodes[0].wins == 7
    assert som.nwins == 0


def test_prune_keeps_everything_above_threshold(som_config):
    som = SomMap(nodes=[make_node(0, [0.1], wins=10), make_node(1, [0.9], wins=12.5)], nwins=34)
    assert maybe_prune(som, som_config) == []
    assert [n.wins for n in som.nodes] == [10, 12.5]
    assert som.nwins == 0


def test_prune_waits_for_max_competitions(som_config):
    som = SomMap(nodes=[make_node(0, [0.1], wins=0)], nwins=33)
    assert maybe_prune(som, som_config) == []
    assert len(som) == 1
    assert som.nwins == 33


def test_connection_rule():
    n = 18
    a = make_node(0, np.zeros(n))
    b = make_node(1, np.zeros(n), relevance=np.full(n, 0.97))
    som = SomMap(nodes=[a, b])
    update_connections(som, OlarfdssomConfig(connection_threshold=0.0301))
    assert som.connections == {(0, 1)}
    update_connections(som, OlarfdssomConfig(connection_threshold=0.0299))
    assert som.connections == set()


def test_zero_connection_threshold_never_connects():
    som = SomMap(nodes=[make_node(0, [0.1, 0.2]), make_node(1, [0.1, 0.2])])
    update_connections(som, OlarfdssomConfig(connection_threshold=0.0))
    assert som.connections == set()


def test_identical_relevance_connects_for_positive_threshold():
    som = SomMap(nodes=[make_node(0, [0.1, 0.2]), make_node(1, [0.7, 0.2])])
    update_connections(som, OlarfdssomConfig(connection_threshold=1e-6))
    assert som.connections == {(0, 1)}


def test_first_pattern_bootstraps(som_config):
    som = train(SomMap(), [0.2, 0.8, 0.0], som_config)
    assert len(som) == 1
    node = som.nodes[0]
    assert node.center.tolist() == [0.2, 0.8, 0.0]
    assert node.relevance.tolist() == [1.0, 1.0, 1.0]
    assert node.wins == 0
    assert som.nwins == 1


def test_far_pattern_creates_node_with_partial_wins(som_config):
    som = train(SomMap(), [0.9, 0.0, 0.0], som_config)
    train(som, [0.9, 0.0, 0.0], som_config)
    assert som.nwins == 2
    train(som, [0.0, 0.0, 0.9], som_config)
    assert len(som) == 2
    assert som.nodes[1].wins == pytest.approx(som_config.lowest_win_fraction * 2)
    assert som.nwins == 3


def test_full_map_adapts_instead_of_growing():
    cfg = OlarfdssomConfig(max_nodes=1)
    som = train(SomMap(), [0.9, 0.0], cfg)
    train(som, [0.0, 0.9], cfg)
    assert len(som) == 1
    assert som.nodes[0].wins == 1
    assert som.nodes[0].center[1] == pytest.approx(cfg.winner_rate * 0.9)


def test_train_rejects_bad_patterns(som_config):
    som = train(SomMap(), [0.5, 0.5], som_config)
    with pytest.raises(DimensionMismatchError):
        train(som, [0.5, 0.5, 0.5], som_config)
    with pytest.raises(InputValidationError):
        train(som, [0.5, 1.5], som_config)


def test_identical_patterns_converge_to_one_node(som_config):
    som = SomMap()
    for _ in range(200):
        train(som, [0.3, 0.7, 0.1], som_config)
    assert len(som) == 1
    np.testing.assert_allclose(som.nodes[0].center, [0.3, 0.7, 0.1])


def test_cluster_is_read_only(som_config, category_pattern):
    rng = np.random.default_rng(0)
    model = Olarfdssom(som_config)
    for k in range(3):
        for _ in range(15):
            model.train(category_pattern(k, rng))
    before = model.snapshot()
    x = category_pattern(1, rng)
    first = model.cluster(x)
    second = model.cluster(x)
    after = model.snapshot()
    assert first == second
    assert before.nwins == after.nwins and before.connections == after.connections
    for a, b in zip(before.nodes, after.nodes):
        assert a.id == b.id and a.wins == b.wins
        np.testing.assert_array_equal(a.center, b.center)
        np.testing.assert_array_equal(a.delta, b.delta)
        np.testing.assert_array_equal(a.relevance, b.relevance)


def test_cluster_on_empty_map():
    with pytest.raises(EmptyMapError):
        cluster(SomMap(), [0.1, 0.2])


def test_stream_invariants(som_config, category_pattern):
    rng = np.random.default_rng(42)
    model = Olarfdssom(som_config)
    wins_seen = {}
    for _ in range(600):
        model.train(category_pattern(int(rng.integers(0, 5)), rng))
        som = model.som
        assert len(som) <= som_config.max_nodes
        for node in som.nodes:
            assert np.all(node.relevance >= 0.0) and np.all(node.relevance <= 1.0)
            assert np.all(node.delta >= 0.0)
            assert np.all(node.center >= 0.0) and np.all(node.center <= 1.0)
            assert node.wins >= wins_seen.get(node.id, 0.0)
            wins_seen[node.id] = node.wins
        live = {n.id for n in som.nodes}
        assert all(a in live and b in live for a, b in som.connections)


def test_ids_are_never_reused(som_config, category_pattern):
    rng = np.random.default_rng(3)
    model = Olarfdssom(som_config)
    seen = set()
    for step in range(400):
        model.train(category_pattern(step // 40 % 5, rng, 0.05))
        for node in model.som.nodes:
            seen.add(node.id)
    assert len(seen) <= model.som.next_id
    assert max(seen) < model.som.next_id


def test_training_is_deterministic(som_config, category_pattern):
    def run():
        rng = np.random.default_rng(11)
        model = Olarfdssom(som_config)
        for step in range(300):
            model.train(category_pattern(step // 20 % 5, rng))
        return model.snapshot()

    a, b = run(), run()
    assert [n.id for n in a.nodes] == [n.id for n in b.nodes]
    for x, y in zip(a.nodes, b.nodes):
        np.testing.assert_array_equal(x.center, y.center)
        assert x.wins == y.wins


def test_recovers_orthogonal_categories(som_config, category_pattern):
    cluster_counts, errors = [], []
    for seed in range(30):
        rng = np.random.default_rng(seed)
        model = Olarfdssom(som_config)
        for _ in range(3):
            for k in rng.permutation(5):
                for _ in range(20):
                    model.train(category_pattern(int(k), rng))
        truths = [k for k in range(5) for _ in range(40)]
        assigned = model.cluster_many([category_pattern(k, rng) for k in truths])
        report = evaluate(assigned, truths)
        cluster_counts.append(report.n_clusters)
        errors.append(report.clustering_error)
    assert 5 <= np.median(cluster_counts) <= 7
    assert np.median(errors) <= 0.1


def test_established_category_survives_prunes_with_its_wins(category_pattern):
    rng = np.random.default_rng(0)
    # unconnected, so only wins can change the old node
    model = Olarfdssom(OlarfdssomConfig(connection_threshold=0.0))
    x = category_pattern(0, rng, noise=0.0)
    for _ in range(40):
        model.train(x)
    node_id = model.cluster(x)
    wins = model.som.node(node_id).wins
    assert wins == 39
    prunes_before = model.prune_events
    others = [category_pattern(1, rng, noise=0.0), category_pattern(2, rng, noise=0.0)]
    for block in range(8):
        for _ in range(20):
            model.train(others[block % 2])
    assert model.prune_events - prunes_before >= 3
    assert model.som.node(node_id).wins == wins
    assert model.cluster(x) == node_id
