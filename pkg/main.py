#!/usr/bin/env -S uv run --script
import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from AppConfig import AppConfig
from Errors import InputValidationError, SemanticMapError
from GraphExporter import GraphExporter
from Ingest import format_sequence, read_sequence, write_sequence
from LatinHypercube import EvalProtocol, format_plan, format_results, format_sensitivity, load_ranges, sample, search, sensitivity
from Logger import configure_logging, logger
from ModelConfig import ModelConfig, load_presets
from Olarfdssom import cluster
from Pipeline import NODE_LEVEL, Pipeline, cross_evaluate, overtime_rows, overtime_summary, unique_ids
from Reports import format_assignments, format_checkpoints, format_crosseval, format_overtime, format_report, format_semantic_nodes, format_trajectory
from Records import SequenceFile
from RunManifest import RunManifest
from SomSerializer import SomSerializer
from Synthetic import generate_synthetic, load_synth_spec

# command line flag -> configuration field
SOM_FLAGS = {
    "at": "activation_threshold",
    "lp": "lowest_win_fraction",
    "beta": "relevance_rate",
    "maxcomp": "max_competitions",
    "eb": "winner_rate",
    "en": "neighbor_rate",
    "s": "relevance_smoothness",
    "c": "connection_threshold",
    "nmax": "max_nodes",
}
SEMMAP_FLAGS = {
    "semmap_at": "activation_threshold",
    "semmap_e": "learning_rate",
    "st": "summation_limit",
}
# run flag -> manifest field
RUN_FLAGS = {
    "out": "output_dir",
    "preset": "preset",
    "seed": "seed",
    "shuffle": "shuffle",
    "online": "online_categorization",
    "state_encoding": "state_encoding",
    "checkpoints": "checkpoints",
}


def _add_param_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("parameters (override the preset)")
    group.add_argument("--preset", default=None, help="parameter preset name (default A)")
    group.add_argument("--at", type=float, help="SOM activation threshold a_t")
    group.add_argument("--lp", type=float, help="lowest win fraction for pruning")
    group.add_argument("--beta", type=float, help="relevance update rate")
    group.add_argument("--maxcomp", type=int, help="competitions between prunes")
    group.add_argument("--eb", type=float, help="winner learning rate")
    group.add_argument("--en", type=float, help="neighbor learning rate")
    group.add_argument("--s", type=float, help="relevance smoothness")
    group.add_argument("--c", type=float, help="connection threshold")
    group.add_argument("--nmax", type=int, help="maximum number of SOM nodes")
    group.add_argument("--st", type=float, help="SEMMAP summation limit s_t")
    group.add_argument("--semmap-at", type=float, help="SEMMAP activation threshold")
    group.add_argument("--semmap-e", type=float, help="SEMMAP center learning rate")


def _overrides(args: argparse.Namespace, flags: Dict[str, str]) -> Dict[str, Any]:
    return {fieldname: getattr(args, flag) for flag, fieldname in flags.items() if getattr(args, flag, None) is not None}


def _write(text: str, out: Optional[Path]) -> None:
    """Write to a file, or stdout when no path is given."""
    if out is None:
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text, encoding="utf-8", newline="\n")
    except OSError as e:
        raise SemanticMapError(f"could not write {out}: {e}") from e
    logger.info(f"wrote {out}")


class SemanticMapApp:
    """Command line front end: one handler per sub-command."""

    def __init__(self, config: Optional[AppConfig] = None) -> None:
        self.logger = logging.getLogger(__name__)
        self.config = config or AppConfig()
        self.presets = load_presets(self.config.presets_path)

    def model_config(
        self,
        preset: Optional[str],
        semmap: Dict[str, Any],
        olarfdssom: Dict[str, Any],
        sequences: Sequence[SequenceFile] = (),
    ) -> ModelConfig:
        """Preset plus overrides; the object count comes from the inputs unless given."""
        name = preset or self.config.default_preset
        if name not in self.presets:
            raise InputValidationError(f"unknown preset '{name}', choose from {', '.join(sorted(self.presets))}")
        semmap = dict(semmap)
        counts = {s.n_objects for s in sequences if s.n_objects > 0}
        if "n_objects" not in semmap and len(counts) == 1:
            semmap["n_objects"] = counts.pop()
        config = self.presets[name].build(semmap, olarfdssom)
        self.logger.debug(f"configuration: {config.as_dict()}")
        return config

    def _config_from_args(self, args: argparse.Namespace, sequences: Sequence[SequenceFile]) -> ModelConfig:
        return self.model_config(args.preset, _overrides(args, SEMMAP_FLAGS), _overrides(args, SOM_FLAGS), sequences)

    def cmd_run(self, args: argparse.Namespace) -> int:
        """Train on sequences in order and write maps, state, assignments and the report."""
        if args.manifest:
            manifest = RunManifest.load(args.manifest)
            if args.inputs:
                manifest.inputs = [Path(p) for p in args.inputs]
        else:
            manifest = RunManifest(
                inputs=[Path(p) for p in args.inputs],
                output_dir=Path("out"),
                preset=self.config.default_preset,
            )
        # flags given on the command line win over the manifest
        for flag, fieldname in RUN_FLAGS.items():
            value = getattr(args, flag, None)
            if value is not None:
                setattr(manifest, fieldname, value)
        manifest.semmap = {**manifest.semmap, **_overrides(args, SEMMAP_FLAGS)}
        manifest.olarfdssom = {**manifest.olarfdssom, **_overrides(args, SOM_FLAGS)}
        manifest.validate()

        sequences = [read_sequence(p) for p in manifest.inputs]
        config = self.model_config(manifest.preset, manifest.semmap, manifest.olarfdssom, sequences)
        pipeline = Pipeline(config, online_categorization=manifest.online_categorization, show_progress=args.progress)
        result = pipeline.run_sequences(sequences, seed=manifest.seed if manifest.shuffle else None)

        out = Path(manifest.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        exporter = GraphExporter(self.config.float_precision)
        final = result.final()
        for sequence, sequence_id in zip(sequences, unique_ids(sequences)):
            state = result.states[sequence_id]
            categorization = final.categorizations.get(sequence_id)
            exporter.write(state.topo, out / f"topomap_{sequence_id}.txt", categorization)
            exporter.write(state.topo, out / f"topomap_{sequence_id}.graphml", categorization)
            _write(format_trajectory(state, [r.position for r in sequence.records]), out / f"trajectory_{sequence_id}.tsv")
            _write(format_semantic_nodes(state, categorization), out / f"semantic_nodes_{sequence_id}.tsv")
        SomSerializer(manifest.state_encoding).save(pipeline.som.snapshot(), config.olarfdssom, out / "som_state.json")
        _write(format_assignments(result), out / "assignments.tsv")
        if any(state.labels and any(label is not None for label in state.labels) for state in result.states.values()):
            _write(format_report(result, len(pipeline.som), pipeline.som.trainings), out / "report.txt")
            if manifest.checkpoints:
                _write(format_checkpoints(result), out / "checkpoints.tsv")
        else:
            self.logger.info("inputs carry no labels, skipping the evaluation report")
        return 0

    def cmd_overtime(self, args: argparse.Namespace) -> int:
        """Evaluate each sequence right after its training and again after all training."""
        if len(args.inputs) < 2:
            raise InputValidationError("over-time evaluation needs at least two sequences")
        sequences = [read_sequence(p) for p in args.inputs]
        config = self._config_from_args(args, sequences)
        result = Pipeline(config, show_progress=args.progress).run_sequences(sequences, seed=args.seed)
        tolerance = self.config.overtime_tolerance if args.tolerance is None else args.tolerance
        summary = overtime_summary(overtime_rows(result, args.level), tolerance)
        self.logger.info(
            f"final CE similar or better for {summary.ce_not_worse:.0%} of sequences, "
            f"accuracy for {summary.accuracy_not_worse:.0%}"
        )
        _write(format_overtime(summary, args.level), args.out)
        return 0

    def cmd_crosseval(self, args: argparse.Namespace) -> int:
        """Train on one group of sequences, categorize another."""
        train = [read_sequence(p) for p in args.train]
        test = [read_sequence(p) for p in args.test]
        config = self._config_from_args(args, [*train, *test])
        result = cross_evaluate(config, train, test, repeats=args.repeats, seed=args.seed, show_progress=args.progress)
        _write(format_crosseval(result, args.condition), args.out)
        return 0

    def cmd_lhs(self, args: argparse.Namespace) -> int:
        """Latin Hypercube search over the parameter ranges."""
        ranges = load_ranges(args.ranges or self.config.ranges_path)
        k = self.config.lhs_samples if args.k is None else args.k
        plan = sample(ranges, k, seed=args.seed)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _write(format_plan(plan), out / "lhs_plan.tsv")
        if args.plan_only:
            return 0
        if not args.inputs:
            raise InputValidationError("a parameter search needs training sequences (or --plan-only)")
        corpus = [read_sequence(p) for p in args.inputs]
        protocol = EvalProtocol(base=self._config_from_args(args, corpus), level=args.level, order_seed=args.order_seed)
        workers = self.config.lhs_workers if args.workers is None else args.workers
        results = search(plan, corpus, protocol, workers=workers, show_progress=args.progress)
        _write(format_results(results, plan), out / "lhs_results.tsv")
        _write(format_sensitivity(sensitivity(results, plan)), out / "lhs_sensitivity.tsv")
        best = results[0]
        if best.report is not None:
            self.logger.info(f"best sample {best.sample}: CE {best.report.clustering_error:.4f}, accuracy {best.report.accuracy:.4f}")
        return 0

    def cmd_synth(self, args: argparse.Namespace) -> int:
        """Generate a labeled sequence from a synthetic world description."""
        overrides = {"seed": args.seed, "noise": args.noise, "laps": args.laps, "sequence_id": args.sequence_id}
        spec = load_synth_spec(args.spec or self.config.demo_world_path, overrides)
        sequence = generate_synthetic(spec)
        if args.out is None:
            sys.stdout.write(format_sequence(sequence, self.config.float_precision))
        else:
            write_sequence(sequence, args.out)
        return 0

    def cmd_export(self, args: argparse.Namespace) -> int:
        """Build one sequence's topological map (no SOM training) and export it."""
        sequence = read_sequence(args.input)
        config = self._config_from_args(args, [sequence])
        pipeline = Pipeline(config, show_progress=args.progress)
        state = pipeline.map_only(sequence)
        clusters = None
        if args.som_state:
            som_map, som_config = SomSerializer().load(args.som_state)
            if som_map.nodes:
                clusters = {node.id: cluster(som_map, node.objects, som_config.epsilon) for node in state.topo.nodes}
            else:
                self.logger.warning(f"{args.som_state} holds no categories, exporting without clusters")
        exporter = GraphExporter(self.config.float_precision)
        if args.out is not None:
            exporter.write(state.topo, args.out, clusters)
        elif args.format == "graphml":
            sys.stdout.write(exporter.export_graphml(state.topo, clusters))
        else:
            sys.stdout.write(exporter.export_graph(state.topo, clusters))
        return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="semmap", description="Incremental semantic mapping with online categorization")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    parser.add_argument("-q", "--quiet", action="store_true", help="warnings and errors only")
    parser.add_argument("--progress", action="store_true", help="show progress bars")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="train on sequences and write maps and reports")
    run.add_argument("inputs", nargs="*", type=Path, help="sequence files, trained in this order")
    run.add_argument("--manifest", type=Path, help="JSON run manifest instead of positional inputs")
    run.add_argument("--out", type=Path, help="output directory (default out)")
    run.add_argument("--seed", type=int, help="seed for the shuffled order")
    run.add_argument("--shuffle", action="store_true", default=None, help="shuffle the sequence order (needs --seed)")
    run.add_argument("--online", action="store_true", default=None, help="log the category of every record while running")
    run.add_argument("--state-encoding", choices=["fixed6", "hex"], help="float encoding of som_state.json (default fixed6)")
    run.add_argument(
        "--checkpoints",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="write checkpoints.tsv with the measures after every sequence (default on)",
    )
    _add_param_flags(run)

    overtime = commands.add_parser("overtime", help="mid versus final evaluation per sequence")
    overtime.add_argument("inputs", nargs="+", type=Path)
    overtime.add_argument("--seed", type=int, help="shuffle the order with this seed")
    overtime.add_argument("--tolerance", type=float, help="allowed degradation counted as similar")
    overtime.add_argument("--level", choices=["node", "frame"], default=NODE_LEVEL)
    overtime.add_argument("--out", type=Path, help="output file (default stdout)")
    _add_param_flags(overtime)

    crosseval = commands.add_parser("crosseval", help="train on one group, test on another")
    crosseval.add_argument("--train", nargs="+", type=Path, required=True)
    crosseval.add_argument("--test", nargs="+", type=Path, required=True)
    crosseval.add_argument("--repeats", type=int, default=1)
    crosseval.add_argument("--seed", type=int)
    crosseval.add_argument("--condition", default="train/test", help="row label of the summary")
    crosseval.add_argument("--out", type=Path, help="output file (default stdout)")
    _add_param_flags(crosseval)

    lhs = commands.add_parser("lhs", help="Latin Hypercube parameter search")
    lhs.add_argument("inputs", nargs="*", type=Path, help="training sequences")
    lhs.add_argument("-k", type=int, help="number of samples (default 100)")
    lhs.add_argument("--seed", type=int)
    lhs.add_argument("--order-seed", type=int, help="shuffle the corpus order for every sample")
    lhs.add_argument("--workers", type=int)
    lhs.add_argument("--ranges", type=Path, help="parameter ranges JSON")
    lhs.add_argument("--level", choices=["node", "frame"], default=NODE_LEVEL)
    lhs.add_argument("--plan-only", action="store_true", help="write the sample plan and stop")
    lhs.add_argument("--out", type=Path, default=Path("lhs"), help="output directory")
    _add_param_flags(lhs)

    synth = commands.add_parser("synth", help="generate a synthetic labeled sequence")
    synth.add_argument("--spec", type=Path, help="world description JSON (default: demo world)")
    synth.add_argument("--seed", type=int)
    synth.add_argument("--noise", type=float)
    synth.add_argument("--laps", type=int)
    synth.add_argument("--sequence-id")
    synth.add_argument("--out", type=Path, help="output file (default stdout)")

    export = commands.add_parser("export", help="build and export one topological map")
    export.add_argument("input", type=Path)
    export.add_argument("--som-state", type=Path, help="saved SOM used to annotate clusters")
    export.add_argument("--format", choices=["text", "graphml"], default="text", help="stdout format")
    export.add_argument("--out", type=Path, help="output file; .graphml selects GraphML")
    _add_param_flags(export)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main application entry point."""
    args = build_parser().parse_args(argv)
    if args.verbose:
        configure_logging(logging.DEBUG)
    elif args.quiet:
        configure_logging(logging.WARNING)
    if args.command == "run" and not args.manifest and not args.inputs:
        logger.error("run needs input sequences or --manifest")
        return InputValidationError.exit_code

    try:
        app = SemanticMapApp(AppConfig())
        handler = getattr(app, f"cmd_{args.command}")
        return handler(args)
    except SemanticMapError as e:
        logger.error(f"{args.command}: {e}")
        return e.exit_code
    except Exception as e:
        logger.error(f"Application error: {e}")
        return SemanticMapError.exit_code


if __name__ == "__main__":
    sys.exit(main())
