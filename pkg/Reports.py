"""Tab-separated text outputs of the command line tools."""

from typing import Dict, List, Optional, Sequence

from Metrics import EvalReport
from Pipeline import (
    FRAME_LEVEL,
    LEVELS,
    NODE_LEVEL,
    CrossEvalResult,
    OverTimeSummary,
    ReplayResult,
    RunState,
    node_truths,
)

MEASURE_COLUMNS = ["ce", "accuracy", "matched_accuracy", "clusters", "categories", "samples"]


def _lines(lines: List[str]) -> str:
    return "".join(f"{line}\n" for line in lines)


def _f(value: Optional[float]) -> str:
    return "nan" if value is None else f"{value:.6f}"


def _measures(report: EvalReport) -> List[str]:
    return [
        _f(report.clustering_error),
        _f(report.accuracy),
        _f(report.matched_accuracy),
        str(report.n_clusters),
        str(report.n_categories),
        str(report.n_samples),
    ]


def format_report(result: ReplayResult, som_nodes: int, trainings: int) -> str:
    """Evaluation of the final checkpoint, pooled over all sequences and per sequence."""
    lines = [
        "# semantic map evaluation",
        f"seed\t{'none' if result.seed is None else result.seed}",
        f"order\t{','.join(result.order)}",
        f"som_nodes\t{som_nodes}",
        f"trainings\t{trainings}",
        "\t".join(["level", "scope", *MEASURE_COLUMNS]),
    ]
    for level in LEVELS:
        overall = result.overall(level)
        if overall is not None:
            lines.append("\t".join([level, "all", *_measures(overall)]))
    final = result.final()
    for level in LEVELS:
        for sequence_id in result.order:
            evaluation = final.evaluations.get(sequence_id)
            report = evaluation.level(level) if evaluation else None
            if report is not None:
                lines.append("\t".join([level, sequence_id, *_measures(report)]))
    return _lines(lines)


def format_assignments(result: ReplayResult) -> str:
    """One row per record: winner place node, its final cluster, online cluster and label."""
    lines = ["\t".join(["sequence", "record", "node", "cluster", "online_cluster", "label"])]
    final = result.final()
    for sequence_id in result.order:
        state = result.states[sequence_id]
        categorization = final.categorizations.get(sequence_id, {})
        for entry, label in zip(state.log, state.labels):
            cluster = categorization.get(entry.node_id)
            lines.append(
                "\t".join(
                    [
                        sequence_id,
                        str(entry.record_index),
                        str(entry.node_id),
                        "-" if cluster is None else str(cluster),
                        "-" if entry.cluster_id is None else str(entry.cluster_id),
                        label or "-",
                    ]
                )
            )
    return _lines(lines)


def format_trajectory(state: RunState, positions: Sequence) -> str:
    """Plot data: the replayed positions with their winner node and label."""
    lines = ["\t".join(["x", "y", "node", "label"])]
    for position, entry, label in zip(positions, state.log, state.labels):
        lines.append(f"{position.x:.6f}\t{position.y:.6f}\t{entry.node_id}\t{label or '-'}")
    return _lines(lines)


def format_semantic_nodes(state: RunState, categorization: Optional[Dict[int, int]]) -> str:
    """Plot data: place nodes with their category and ground-truth label."""
    truths = node_truths(state)
    lines = ["\t".join(["node", "x", "y", "cluster", "truth"])]
    for node in state.topo.nodes:
        cluster = (categorization or {}).get(node.id)
        lines.append(
            f"{node.id}\t{node.center[0]:.6f}\t{node.center[1]:.6f}\t"
            f"{'-' if cluster is None else cluster}\t{truths.get(node.id, '-')}"
        )
    return _lines(lines)


def format_overtime(summary: OverTimeSummary, level: str = NODE_LEVEL) -> str:
    """Per-sequence measures after own training (mid) and after all training (final)."""
    lines = [
        f"# over-time evaluation ({level} level)",
        "\t".join(["sequence", "mid_ce", "final_ce", "mid_accuracy", "final_accuracy"]),
    ]
    for row in summary.rows:
        lines.append(
            "\t".join(
                [
                    row.sequence_id,
                    _f(row.mid.clustering_error if row.mid else None),
                    _f(row.final.clustering_error if row.final else None),
                    _f(row.mid.accuracy if row.mid else None),
                    _f(row.final.accuracy if row.final else None),
                ]
            )
        )
    lines.extend(
        [
            f"# tolerance\t{summary.tolerance:.6f}",
            f"# ce_not_worse\t{summary.ce_not_worse:.6f}",
            f"# accuracy_not_worse\t{summary.accuracy_not_worse:.6f}",
            f"# ce_strictly_not_worse\t{summary.ce_strict:.6f}",
            f"# accuracy_strictly_not_worse\t{summary.accuracy_strict:.6f}",
        ]
    )
    return _lines(lines)


def format_crosseval(result: CrossEvalResult, condition: str) -> str:
    """Mean (std) table over repetitions, then every repetition."""
    lines = [
        f"# cross-condition evaluation: {condition}",
        f"# train\t{','.join(result.train_ids)}",
        f"# test\t{','.join(result.test_ids)}",
        f"# seed\t{'none' if result.seed is None else result.seed}",
        "\t".join(
            [
                "condition",
                "level",
                "ce_mean",
                "ce_std",
                "accuracy_mean",
                "accuracy_std",
                "clusters_mean",
                "clusters_std",
                "categories_mean",
            ]
        ),
    ]
    for level in (NODE_LEVEL, FRAME_LEVEL):
        summary = result.summary(level)
        if not summary:
            continue
        lines.append(
            "\t".join(
                [
                    condition,
                    level,
                    _f(summary["ce"][0]),
                    _f(summary["ce"][1]),
                    _f(summary["accuracy"][0]),
                    _f(summary["accuracy"][1]),
                    f"{summary['clusters'][0]:.2f}",
                    f"{summary['clusters'][1]:.2f}",
                    f"{summary['categories'][0]:.2f}",
                ]
            )
        )
    lines.append("\t".join(["repetition", "level", *MEASURE_COLUMNS, "som_nodes"]))
    for row in result.rows:
        for level in (NODE_LEVEL, FRAME_LEVEL):
            report = getattr(row, level)
            if report is not None:
                lines.append("\t".join([str(row.repetition), level, *_measures(report), str(row.som_nodes)]))
    return _lines(lines)


def format_checkpoints(result: ReplayResult) -> str:
    """Measures of every sequence trained so far, at each checkpoint of the run."""
    lines = [
        "# checkpoint evaluation",
        "\t".join(["checkpoint", "after", "sequence", "level", *MEASURE_COLUMNS, "som_nodes"]),
    ]
    for index, checkpoint in enumerate(result.checkpoints):
        for sequence_id in result.order[: index + 1]:
            evaluation = checkpoint.evaluations.get(sequence_id)
            for level in LEVELS:
                report = evaluation.level(level) if evaluation else None
                if report is not None:
                    lines.append(
                        "\t".join(
                            [str(index), checkpoint.after_sequence, sequence_id, level, *_measures(report), str(checkpoint.som_nodes)]
                        )
                    )
    return _lines(lines)
