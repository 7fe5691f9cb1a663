import numpy as np
import pytest

from Errors import EmptyMapError, InputValidationError
from Metrics import EvalReport
from ModelConfig import ModelConfig, OlarfdssomConfig, SemmapConfig
from Pipeline import (
    FRAME_LEVEL,
    NODE_LEVEL,
    AssignmentEntry,
    OverTimeRow,
    Pipeline,
    cross_evaluate,
    node_truths,
    overtime_rows,
    overtime_summary,
)
from Records import DatasetRecord, ObjectEvidence, PositionSample, SequenceFile
from Synthetic import generate_synthetic


def record(x, y, values, label=None):
    return DatasetRecord(PositionSample(x, y), ObjectEvidence.of(values), label)


@pytest.fixture
def small_config() -> ModelConfig:
    return ModelConfig(semmap=SemmapConfig(n_objects=3))


@pytest.fixture
def loop_a(make_loop_world):
    return generate_synthetic(make_loop_world(["kitchen", "office", "office", "kitchen"], seed=1, sequence_id="a"))


@pytest.fixture
def loop_b(make_loop_world):
    return generate_synthetic(make_loop_world(["bathroom", "lounge", "lounge", "bathroom"], seed=2, sequence_id="b"))


def test_first_record_leaves_som_untouched(small_config):
    pipeline = Pipeline(small_config)
    state = pipeline.step(pipeline.new_state("s"), record(0.0, 0.0, [0.5, 0.0, 0.0]))
    assert len(state.topo) == 1
    assert len(pipeline.som) == 0
    assert state.emissions_count == 0
    assert state.log == [AssignmentEntry(0, 0, None)]


def test_transition_trains_once(small_config):
    pipeline = Pipeline(small_config)
    state = pipeline.new_state("s")
    pipeline.step(state, record(0.0, 0.0, [0.5, 0.0, 0.0]))
    pipeline.step(state, record(9.0, 0.0, [0.0, 0.5, 0.0]))
    assert state.emissions_count == 1
    assert pipeline.som.trainings == 1
    assert len(pipeline.som) == 1


def test_samples_within_one_basin_never_train(small_config):
    pipeline = Pipeline(small_config)
    state = pipeline.new_state("s")
    pipeline.replay(state, [record(0.01 * i, 0.0, [0.3, 0.3, 0.3]) for i in range(30)])
    assert state.emissions_count == 0
    assert len(state.log) == 30


def test_trainings_equal_winner_transitions(loop_a):
    pipeline = Pipeline(ModelConfig())
    state = pipeline.replay(pipeline.new_state("a"), loop_a.records)
    assert state.emissions_count == state.winner_transitions()
    assert pipeline.som.trainings == state.emissions_count
    assert len(state.log) == len(loop_a.records)


def test_replay_summary_counts_prune_events(loop_a, caplog):
    pipeline = Pipeline(ModelConfig(olarfdssom=OlarfdssomConfig(max_competitions=5)))
    with caplog.at_level("INFO", logger="Pipeline"):
        pipeline.replay(pipeline.new_state("a"), loop_a.records)
    assert pipeline.som.prune_events > 0
    summary = [r.getMessage() for r in caplog.records if r.name == "Pipeline" and r.getMessage().startswith("sequence 'a'")]
    assert len(summary) == 1
    assert summary[0].endswith(f"{pipeline.som.prune_events} prune events so far")


def test_map_only_does_not_train(loop_a):
    pipeline = Pipeline(ModelConfig())
    state = pipeline.map_only(loop_a)
    assert len(state.topo) > 1
    assert state.emissions_count == 0
    assert len(pipeline.som) == 0


def test_categorize_nodes_is_pure(loop_a):
    pipeline = Pipeline(ModelConfig())
    state = pipeline.replay(pipeline.new_state("a"), loop_a.records)
    trainings = pipeline.som.trainings
    first = pipeline.categorize_nodes(state)
    second = pipeline.categorize_nodes(state)
    assert first == second
    assert set(first) == {n.id for n in state.topo.nodes}
    assert pipeline.som.trainings == trainings


def test_categorize_with_single_som_node(small_config):
    pipeline = Pipeline(small_config)
    state = pipeline.new_state("s")
    pipeline.step(state, record(0.0, 0.0, [0.5, 0.0, 0.0]))
    pipeline.step(state, record(9.0, 0.0, [0.5, 0.0, 0.0]))
    only = pipeline.som.snapshot().nodes[0].id
    assert pipeline.categorize_nodes(state) == {0: only, 1: only}


def test_categorize_without_categories(small_config):
    pipeline = Pipeline(small_config)
    state = pipeline.step(pipeline.new_state("s"), record(0.0, 0.0, [0.5, 0.0, 0.0]))
    with pytest.raises(EmptyMapError, match="no categories learned yet"):
        pipeline.categorize_nodes(state)


def test_online_categorization_fills_the_log(loop_a):
    pipeline = Pipeline(ModelConfig(), online_categorization=True)
    state = pipeline.replay(pipeline.new_state("a"), loop_a.records)
    assert state.log[0].cluster_id is None
    assert state.log[-1].cluster_id is not None


def test_node_truth_is_majority_then_first_seen(small_config):
    pipeline = Pipeline(small_config)
    state = pipeline.new_state("s")
    state.log = [AssignmentEntry(i, node) for i, node in enumerate([0, 0, 0, 1, 1])]
    state.labels = ["office", "kitchen", "kitchen", "lounge", "bathroom"]
    assert node_truths(state) == {0: "kitchen", 1: "lounge"}


def test_single_sequence_mid_equals_final(loop_a):
    result = Pipeline(ModelConfig()).run_sequences([loop_a])
    assert len(result.checkpoints) == 1
    assert result.mid("a") is result.final()
    assert result.final().evaluations["a"].node.n_categories == 2


def test_duplicate_ids_are_suffixed(loop_a):
    result = Pipeline(ModelConfig()).run_sequences([loop_a, loop_a])
    assert result.order == ["a", "a_2"]
    assert len(result.checkpoints) == 2
    assert set(result.final().categorizations) == {"a", "a_2"}
    assert set(result.checkpoints[0].categorizations) == {"a"}


def test_seeded_order_is_reproducible(loop_a, loop_b):
    first = Pipeline(ModelConfig()).run_sequences([loop_a, loop_b], seed=4)
    second = Pipeline(ModelConfig()).run_sequences([loop_a, loop_b], seed=4)
    assert first.order == second.order
    assert sorted(first.order) == ["a", "b"]
    assert first.final().categorizations == second.final().categorizations
    assert first.seed == 4


def test_explicit_order_must_be_a_permutation(loop_a, loop_b):
    with pytest.raises(InputValidationError):
        Pipeline(ModelConfig()).run_sequences([loop_a, loop_b], order=[0, 0])


def test_object_count_must_match(loop_a, small_config):
    with pytest.raises(InputValidationError, match="objects"):
        Pipeline(small_config).run_sequences([loop_a])


def test_no_sequences():
    with pytest.raises(InputValidationError):
        Pipeline(ModelConfig()).run_sequences([])


def test_overall_report_pools_both_levels(loop_a, loop_b):
    result = Pipeline(ModelConfig()).run_sequences([loop_a, loop_b])
    node = result.overall(NODE_LEVEL)
    frame = result.overall(FRAME_LEVEL)
    assert node.n_categories == 4
    assert frame.n_samples == len(loop_a.records) + len(loop_b.records)
    assert 0.0 <= node.clustering_error <= 1.0


def test_earlier_sequence_does_not_degrade(make_loop_world):
    similar = 0
    for seed in range(30):
        a = generate_synthetic(make_loop_world(["kitchen", "office", "office", "kitchen"], seed=2 * seed, sequence_id="a"))
        b = generate_synthetic(make_loop_world(["bathroom", "lounge", "lounge", "bathroom"], seed=2 * seed + 1, sequence_id="b"))
        result = Pipeline(ModelConfig()).run_sequences([a, b])
        row = overtime_rows(result)[0]
        assert row.sequence_id == "a"
        if row.final.clustering_error <= row.mid.clustering_error + 0.05:
            similar += 1
    assert similar >= 24


def report(ce, acc):
    return EvalReport(accuracy=acc, clustering_error=ce, n_clusters=2, n_categories=2, n_samples=10)


def test_overtime_summary_fractions():
    rows = [
        OverTimeRow("s1", report(0.30, 0.70), report(0.32, 0.69)),
        OverTimeRow("s2", report(0.30, 0.70), report(0.20, 0.80)),
        OverTimeRow("s3", report(0.30, 0.70), report(0.50, 0.50)),
        OverTimeRow("s4", report(0.30, 0.70), None),
    ]
    summary = overtime_summary(rows, tolerance=0.05)
    assert summary.ce_not_worse == pytest.approx(2 / 3)
    assert summary.accuracy_not_worse == pytest.approx(2 / 3)
    assert summary.ce_strict == pytest.approx(1 / 3)
    assert summary.accuracy_strict == pytest.approx(1 / 3)


def test_overtime_rows_follow_training_order(loop_a, loop_b):
    result = Pipeline(ModelConfig()).run_sequences([loop_a, loop_b], order=[1, 0])
    rows = overtime_rows(result)
    assert [r.sequence_id for r in rows] == ["b", "a"]
    assert rows[1].mid == rows[1].final


def test_cross_evaluate_shape(loop_a, loop_b, make_loop_world):
    unseen = generate_synthetic(make_loop_world(["kitchen", "office", "office", "kitchen"], seed=9, sequence_id="c"))
    result = cross_evaluate(ModelConfig(), [loop_a, loop_b], [loop_a, unseen], repeats=3, seed=5)
    assert len(result.rows) == 3
    assert result.train_ids == ["a", "b"]
    assert result.test_ids == ["a", "c"]
    assert all(sorted(row.order) == ["a", "b"] for row in result.rows)
    summary = result.summary(NODE_LEVEL)
    assert set(summary) == {"ce", "accuracy", "clusters", "categories"}
    ce = [row.node.clustering_error for row in result.rows]
    assert summary["ce"][0] == pytest.approx(np.mean(ce))
    assert summary["ce"][1] == pytest.approx(np.std(ce, ddof=1))
    assert summary["categories"][0] == 2.0


def test_cross_evaluate_is_reproducible(loop_a, loop_b):
    first = cross_evaluate(ModelConfig(), [loop_a, loop_b], [loop_b], repeats=2, seed=3)
    second = cross_evaluate(ModelConfig(), [loop_a, loop_b], [loop_b], repeats=2, seed=3)
    assert [r.order for r in first.rows] == [r.order for r in second.rows]
    assert [r.node for r in first.rows] == [r.node for r in second.rows]


def test_cross_evaluate_needs_both_groups(loop_a):
    with pytest.raises(InputValidationError):
        cross_evaluate(ModelConfig(), [loop_a], [])
