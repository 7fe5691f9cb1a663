"""
Replay driver connecting the topological map to the categorization SOM.

Every time the winning place node changes, the object vector of the node the
agent left trains the SOM. Categories of map nodes are answered at any moment
by clustering their current object vectors against a snapshot of the SOM.
"""

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from Errors import EmptyMapError, InputValidationError
from Metrics import EvalReport, evaluate
from ModelConfig import ModelConfig
from Olarfdssom import Olarfdssom, cluster
from Records import DatasetRecord, SequenceFile
from SemMap import SemMap, TopoMap

NODE_LEVEL = "node"
FRAME_LEVEL = "frame"
LEVELS = (NODE_LEVEL, FRAME_LEVEL)


@dataclass
class AssignmentEntry:
    record_index: int
    node_id: int
    cluster_id: Optional[int] = None


@dataclass
class RunState:
    """Replay state of one sequence; the SOM is shared between sequences of a run."""

    sequence_id: str
    semmap: SemMap
    som: Olarfdssom
    emissions_count: int = 0
    log: List[AssignmentEntry] = field(default_factory=list)
    labels: List[Optional[str]] = field(default_factory=list)

    @property
    def topo(self) -> TopoMap:
        return self.semmap.topo

    def winner_transitions(self) -> int:
        """Number of winner-id changes along the log."""
        return sum(1 for a, b in zip(self.log, self.log[1:]) if a.node_id != b.node_id)


@dataclass
class SequenceEvaluation:
    node: Optional[EvalReport] = None
    frame: Optional[EvalReport] = None

    def level(self, name: str) -> Optional[EvalReport]:
        return self.node if name == NODE_LEVEL else self.frame


@dataclass
class Checkpoint:
    """Categorization of every sequence trained so far, taken after one sequence."""

    after_sequence: str
    categorizations: Dict[str, Dict[int, int]] = field(default_factory=dict)
    evaluations: Dict[str, SequenceEvaluation] = field(default_factory=dict)
    som_nodes: int = 0


@dataclass
class ReplayResult:
    states: Dict[str, RunState]
    order: List[str]
    checkpoints: List[Checkpoint]
    seed: Optional[int] = None

    def mid(self, sequence_id: str) -> Checkpoint:
        """Checkpoint taken right after the sequence's own training."""
        return self.checkpoints[self.order.index(sequence_id)]

    def final(self) -> Checkpoint:
        return self.checkpoints[-1]

    def pairs(self, level: str, checkpoint: Optional[Checkpoint] = None, sequence_ids: Optional[Sequence[str]] = None):
        """(cluster, truth) pairs pooled over sequences at a checkpoint, default the final one."""
        checkpoint = checkpoint or self.final()
        assignments: List[int] = []
        truths: List[str] = []
        for sequence_id in sequence_ids or self.order:
            categorization = checkpoint.categorizations.get(sequence_id)
            if categorization is None:
                continue
            a, t = evaluation_pairs(self.states[sequence_id], categorization, level)
            assignments.extend(a)
            truths.extend(t)
        return assignments, truths

    def overall(self, level: str = NODE_LEVEL, sequence_ids: Optional[Sequence[str]] = None) -> Optional[EvalReport]:
        assignments, truths = self.pairs(level, sequence_ids=sequence_ids)
        return evaluate(assignments, truths) if assignments else None


def node_truths(state: RunState) -> Dict[int, str]:
    """Majority label of the records each node won; ties go to the label seen first."""
    counts: Dict[int, Counter] = {}
    first_seen: Dict[int, Dict[str, int]] = {}
    for entry, label in zip(state.log, state.labels):
        if label is None:
            continue
        counts.setdefault(entry.node_id, Counter())[label] += 1
        first_seen.setdefault(entry.node_id, {}).setdefault(label, entry.record_index)
    truths = {}
    for node_id, counter in counts.items():
        best = max(counter.values())
        candidates = [label for label, count in counter.items() if count == best]
        truths[node_id] = min(candidates, key=lambda label: first_seen[node_id][label])
    return truths


def evaluation_pairs(state: RunState, categorization: Dict[int, int], level: str) -> Tuple[List[int], List[str]]:
    """Predicted clusters and truth labels at node level or frame level."""
    if level == NODE_LEVEL:
        truths = node_truths(state)
        ids = sorted(n for n in truths if n in categorization)
        return [categorization[n] for n in ids], [truths[n] for n in ids]
    if level == FRAME_LEVEL:
        assignments, labels = [], []
        for entry, label in zip(state.log, state.labels):
            if label is not None and entry.node_id in categorization:
                assignments.append(categorization[entry.node_id])
                labels.append(label)
        return assignments, labels
    raise InputValidationError(f"unknown evaluation level '{level}', expected one of {LEVELS}")


def evaluate_state(state: RunState, categorization: Dict[int, int]) -> SequenceEvaluation:
    result = SequenceEvaluation()
    for level in LEVELS:
        assignments, truths = evaluation_pairs(state, categorization, level)
        if assignments:
            setattr(result, level, evaluate(assignments, truths))
    return result


def unique_ids(sequences: Sequence[SequenceFile]) -> List[str]:
    ids: List[str] = []
    seen: Counter = Counter()
    for sequence in sequences:
        seen[sequence.sequence_id] += 1
        count = seen[sequence.sequence_id]
        ids.append(sequence.sequence_id if count == 1 else f"{sequence.sequence_id}_{count}")
    return ids


class Pipeline:
    """Feeds records through SEMMAP and forwards every transition emission to the SOM."""

    def __init__(
        self,
        config: ModelConfig,
        som: Optional[Olarfdssom] = None,
        online_categorization: bool = False,
        show_progress: bool = False,
    ) -> None:
        self.config = config.validate()
        self.som = som if som is not None else Olarfdssom(config.olarfdssom)
        self.online_categorization = online_categorization
        self.show_progress = show_progress
        self.logger = logging.getLogger(__name__)

    def new_state(self, sequence_id: str = "sequence") -> RunState:
        return RunState(sequence_id=sequence_id, semmap=SemMap(self.config.semmap), som=self.som)

    def step(self, state: RunState, record: DatasetRecord, train: bool = True) -> RunState:
        """Process one record; train the SOM once if the winning node changed."""
        emission = state.semmap.process(record)
        if emission is not None and train:
            state.som.train(emission.vector)
            state.emissions_count += 1
        winner = state.semmap.last_winner
        cluster_id = None
        if self.online_categorization and len(state.som) > 0:
            cluster_id = state.som.cluster(state.topo.node(winner).objects)
        state.log.append(AssignmentEntry(len(state.log), winner, cluster_id))
        state.labels.append(record.label)
        return state

    def replay(self, state: RunState, records: Sequence[DatasetRecord], train: bool = True) -> RunState:
        for record in tqdm(records, desc=state.sequence_id, disable=not self.show_progress, leave=False):
            self.step(state, record, train)
        self.logger.info(
            f"sequence '{state.sequence_id}': {len(state.log)} records, {len(state.topo)} places, "
            f"{len(state.topo.edges)} connections, {state.emissions_count} trainings, {len(state.som)} categories, "
            f"{state.som.prune_events} prune events so far"
        )
        return state

    def map_only(self, sequence: SequenceFile) -> RunState:
        """Build the sequence's topological map without training the SOM."""
        return self.replay(self.new_state(sequence.sequence_id), sequence.records, train=False)

    def categorize_nodes(self, state: RunState) -> Dict[int, int]:
        """Cluster id of every map node from its current object vector; pure."""
        som = state.som.snapshot()
        if not som.nodes:
            raise EmptyMapError()
        topo = state.semmap.snapshot()
        epsilon = state.som.config.epsilon
        return {node.id: cluster(som, node.objects, epsilon) for node in topo.nodes}

    def _checkpoint(self, after: str, states: Dict[str, RunState]) -> Checkpoint:
        checkpoint = Checkpoint(after_sequence=after, som_nodes=len(self.som))
        for sequence_id, state in states.items():
            try:
                categorization = self.categorize_nodes(state)
            except EmptyMapError:
                self.logger.warning(f"no categories learned yet at checkpoint after '{after}'")
                return checkpoint
            checkpoint.categorizations[sequence_id] = categorization
            checkpoint.evaluations[sequence_id] = evaluate_state(state, categorization)
        return checkpoint

    def run_sequences(
        self,
        sequences: Sequence[SequenceFile],
        order: Optional[Sequence[int]] = None,
        seed: Optional[int] = None,
    ) -> ReplayResult:
        """
        Train sequences one after another and checkpoint after each.

        `order` lists sequence indices; without it a seeded shuffle is used
        when `seed` is given, file order otherwise.
        """
        if not sequences:
            raise InputValidationError("no sequences to run")
        if order is None:
            order = (
                [int(i) for i in np.random.default_rng(seed).permutation(len(sequences))]
                if seed is not None
                else list(range(len(sequences)))
            )
        if sorted(order) != list(range(len(sequences))):
            raise InputValidationError(f"order {list(order)} is not a permutation of {len(sequences)} sequences")
        n_objects = self.config.semmap.n_objects
        for sequence in sequences:
            if sequence.records and sequence.n_objects != n_objects:
                raise InputValidationError(
                    f"sequence '{sequence.sequence_id}' has {sequence.n_objects} objects, configured for {n_objects}"
                )

        ids = unique_ids(sequences)
        states: Dict[str, RunState] = {}
        checkpoints: List[Checkpoint] = []
        for index in order:
            sequence_id = ids[index]
            state = self.new_state(sequence_id)
            self.replay(state, sequences[index].records)
            states[sequence_id] = state
            checkpoints.append(self._checkpoint(sequence_id, states))
        return ReplayResult(states=states, order=[ids[i] for i in order], checkpoints=checkpoints, seed=seed)


@dataclass
class OverTimeRow:
    sequence_id: str
    mid: Optional[EvalReport]
    final: Optional[EvalReport]


@dataclass
class OverTimeSummary:
    rows: List[OverTimeRow]
    tolerance: float
    ce_not_worse: float
    accuracy_not_worse: float
    ce_strict: float
    accuracy_strict: float


def overtime_rows(result: ReplayResult, level: str = NODE_LEVEL) -> List[OverTimeRow]:
    """Per sequence, in training order: evaluation after its own training and after all training."""
    final = result.final()
    rows = []
    for sequence_id in result.order:
        mid = result.mid(sequence_id).evaluations.get(sequence_id)
        end = final.evaluations.get(sequence_id)
        rows.append(OverTimeRow(sequence_id, mid.level(level) if mid else None, end.level(level) if end else None))
    return rows


def overtime_summary(rows: List[OverTimeRow], tolerance: float) -> OverTimeSummary:
    """Fractions of sequences whose final evaluation is similar to or better than the mid one."""
    paired = [r for r in rows if r.mid is not None and r.final is not None]

    def fraction(predicate) -> float:
        return sum(1 for r in paired if predicate(r)) / len(paired) if paired else float("nan")

    return OverTimeSummary(
        rows=rows,
        tolerance=tolerance,
        ce_not_worse=fraction(lambda r: r.final.clustering_error <= r.mid.clustering_error + tolerance),
        accuracy_not_worse=fraction(lambda r: r.final.accuracy >= r.mid.accuracy - tolerance),
        ce_strict=fraction(lambda r: r.final.clustering_error <= r.mid.clustering_error),
        accuracy_strict=fraction(lambda r: r.final.accuracy >= r.mid.accuracy),
    )


@dataclass
class CrossEvalRow:
    repetition: int
    order: List[str]
    node: Optional[EvalReport]
    frame: Optional[EvalReport]
    som_nodes: int


@dataclass
class CrossEvalResult:
    train_ids: List[str]
    test_ids: List[str]
    seed: Optional[int]
    rows: List[CrossEvalRow]

    def summary(self, level: str = NODE_LEVEL) -> Dict[str, Tuple[float, float]]:
        """Mean and standard deviation of each measure across repetitions."""
        reports = [getattr(row, level) for row in self.rows if getattr(row, level) is not None]
        if not reports:
            return {}
        columns = {
            "ce": [r.clustering_error for r in reports],
            "accuracy": [r.accuracy for r in reports],
            "clusters": [float(r.n_clusters) for r in reports],
            "categories": [float(r.n_categories) for r in reports],
        }
        ddof = 1 if len(reports) > 1 else 0
        return {name: (float(np.mean(v)), float(np.std(v, ddof=ddof))) for name, v in columns.items()}


def cross_evaluate(
    config: ModelConfig,
    train: Sequence[SequenceFile],
    test: Sequence[SequenceFile],
    repeats: int = 1,
    seed: Optional[int] = None,
    show_progress: bool = False,
) -> CrossEvalResult:
    """
    Train on one group of sequences and evaluate categorization on another.

    Each repetition shuffles the training order and starts from an empty SOM.
    Test sequences that were trained keep their trained map; others are mapped
    with SEMMAP alone and then categorized.
    """
    if not train or not test:
        raise InputValidationError("cross evaluation needs training and test sequences")
    if repeats < 1:
        raise InputValidationError("repeats must be >= 1")
    rng = np.random.default_rng(seed)
    train_ids = unique_ids(train)
    rows = []
    for repetition in range(repeats):
        order = [int(i) for i in rng.permutation(len(train))]
        pipeline = Pipeline(config, show_progress=show_progress)
        result = pipeline.run_sequences(train, order=order)
        node_pairs: Tuple[List[int], List[str]] = ([], [])
        frame_pairs: Tuple[List[int], List[str]] = ([], [])
        for sequence in test:
            if sequence.sequence_id in result.states:
                state = result.states[sequence.sequence_id]
            else:
                state = pipeline.map_only(sequence)
            try:
                categorization = pipeline.categorize_nodes(state)
            except EmptyMapError:
                pipeline.logger.warning(f"repetition {repetition}: no categories learned")
                break
            for level, pairs in ((NODE_LEVEL, node_pairs), (FRAME_LEVEL, frame_pairs)):
                a, t = evaluation_pairs(state, categorization, level)
                pairs[0].extend(a)
                pairs[1].extend(t)
        rows.append(
            CrossEvalRow(
                repetition=repetition,
                order=result.order,
                node=evaluate(*node_pairs) if node_pairs[0] else None,
                frame=evaluate(*frame_pairs) if frame_pairs[0] else None,
                som_nodes=len(pipeline.som),
            )
        )
    return CrossEvalResult(train_ids=train_ids, test_ids=[s.sequence_id for s in test], seed=seed, rows=rows)
