"""
Latin Hypercube parameter search.

Each parameter range is cut into k equal-width subintervals (the sampling
density is uniform, so equal width is equal probability) and every
subinterval receives exactly one of the k samples. A search replays the
training corpus once per sample and ranks configurations by Clustering Error,
then Accuracy.
"""

import json
import logging
import math
import multiprocessing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.stats import qmc
from tqdm import tqdm

from Errors import InputValidationError, SemanticMapError
from Metrics import EvalReport
from ModelConfig import ModelConfig
from Pipeline import NODE_LEVEL, Pipeline
from Records import SequenceFile

TARGETS = ("semmap", "olarfdssom")


@dataclass(frozen=True)
class ParamRange:
    """Sampling range of one parameter; the upper bound may be another parameter's value."""

    name: str
    min: float
    max: float
    integer_valued: bool = False
    target: str = "olarfdssom"
    field: str = ""
    upper_bound_param: Optional[str] = None

    def validate(self) -> "ParamRange":
        if self.target not in TARGETS:
            raise InputValidationError(f"range '{self.name}' targets unknown module '{self.target}'")
        if self.upper_bound_param is None and not self.min < self.max:
            raise InputValidationError(f"range '{self.name}' needs min < max, got [{self.min}, {self.max}]")
        return self


@dataclass
class LhsPlan:
    """k samples by d parameters; `unit` holds the stratified draws before scaling."""

    ranges: List[ParamRange]
    unit: np.ndarray
    values: np.ndarray
    seed: Optional[int] = None

    @property
    def k(self) -> int:
        return int(self.values.shape[0])

    @property
    def names(self) -> List[str]:
        return [r.name for r in self.ranges]

    def row(self, index: int) -> Dict[str, float]:
        return {r.name: float(self.values[index, j]) for j, r in enumerate(self.ranges)}

    def overrides(self, index: int) -> Tuple[Dict[str, Any], Dict[str, Any]]:
        """Field overrides for the semmap and olarfdssom configurations of one sample."""
        per_target: Dict[str, Dict[str, Any]] = {t: {} for t in TARGETS}
        for j, r in enumerate(self.ranges):
            value = self.values[index, j]
            per_target[r.target][r.field or r.name] = int(value) if r.integer_valued else float(value)
        return per_target["semmap"], per_target["olarfdssom"]


def parse_ranges(raw_data: Dict[str, Any]) -> List[ParamRange]:
    ranges = []
    try:
        for raw in raw_data["ranges"]:
            upper = raw["max"]
            dependent = isinstance(upper, str)
            ranges.append(
                ParamRange(
                    name=str(raw["name"]),
                    min=float(raw["min"]),
                    max=float("nan") if dependent else float(upper),
                    integer_valued=bool(raw.get("integer", False)),
                    target=str(raw.get("target", "olarfdssom")),
                    field=str(raw.get("field", raw["name"])),
                    upper_bound_param=upper if dependent else None,
                ).validate()
            )
    except (KeyError, TypeError, ValueError) as e:
        raise InputValidationError(f"malformed parameter ranges: {e}") from e
    names = {r.name for r in ranges}
    for r in ranges:
        if r.upper_bound_param is not None and r.upper_bound_param not in names:
            raise InputValidationError(f"range '{r.name}' is bounded by unknown parameter '{r.upper_bound_param}'")
    return ranges


def load_ranges(path: Path) -> List[ParamRange]:
    try:
        raw_data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as e:
        raise InputValidationError(f"could not open ranges {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise InputValidationError(f"ranges {path} is not valid JSON: {e}") from e
    return parse_ranges(raw_data)


def sample(ranges: Sequence[ParamRange], k: int, seed: Optional[int] = None) -> LhsPlan:
    """Stratified plan: one draw per subinterval per dimension, independently permuted per dimension."""
    if k < 1:
        raise InputValidationError("the number of samples must be >= 1")
    if not ranges:
        raise InputValidationError("no parameter ranges to sample")
    ranges = [r.validate() for r in ranges]
    unit = qmc.LatinHypercube(d=len(ranges), rng=np.random.default_rng(seed)).random(n=k)
    values = np.empty_like(unit)
    index = {r.name: j for j, r in enumerate(ranges)}
    independent = [j for j, r in enumerate(ranges) if r.upper_bound_param is None]
    dependent = [j for j, r in enumerate(ranges) if r.upper_bound_param is not None]
    for j in independent + dependent:
        r = ranges[j]
        upper = values[:, index[r.upper_bound_param]] if r.upper_bound_param is not None else r.max
        if r.upper_bound_param is not None and ranges[index[r.upper_bound_param]].upper_bound_param is not None:
            raise InputValidationError(f"range '{r.name}' is bounded by another dependent range")
        column = r.min + unit[:, j] * (upper - r.min)
        values[:, j] = np.rint(column) if r.integer_valued else column
    return LhsPlan(ranges=list(ranges), unit=unit, values=values, seed=seed)


@dataclass
class EvalProtocol:
    """How one configuration is scored: base parameters, order seed, evaluation level."""

    base: ModelConfig = field(default_factory=ModelConfig)
    level: str = NODE_LEVEL
    order_seed: Optional[int] = None


@dataclass
class SearchResult:
    sample: int
    params: Dict[str, float]
    report: Optional[EvalReport]
    error: Optional[str] = None

    def sort_key(self) -> Tuple[float, float, int]:
        if self.report is None or math.isnan(self.report.clustering_error):
            return (math.inf, math.inf, self.sample)
        return (self.report.clustering_error, -self.report.accuracy, self.sample)


def _evaluate_row(task: Tuple[int, Dict[str, float], Dict[str, Any], Dict[str, Any], Sequence[SequenceFile], EvalProtocol]) -> SearchResult:
    index, params, semmap_overrides, som_overrides, corpus, protocol = task
    try:
        config = protocol.base.with_overrides(semmap_overrides, som_overrides)
        result = Pipeline(config).run_sequences(corpus, seed=protocol.order_seed)
        return SearchResult(index, params, result.overall(protocol.level))
    except SemanticMapError as e:
        return SearchResult(index, params, None, str(e))


def search(
    plan: LhsPlan,
    corpus: Sequence[SequenceFile],
    protocol: EvalProtocol,
    workers: int = 1,
    show_progress: bool = False,
) -> List[SearchResult]:
    """Replay the corpus for every sample and rank by CE ascending, then accuracy descending."""
    if plan.k < 1:
        raise InputValidationError("empty plan")
    logger = logging.getLogger(__name__)
    tasks = [(i, plan.row(i), *plan.overrides(i), corpus, protocol) for i in range(plan.k)]
    results: List[SearchResult] = []
    if workers <= 1:
        for task in tqdm(tasks, desc="lhs", disable=not show_progress):
            results.append(_evaluate_row(task))
    else:
        with multiprocessing.Pool(processes=workers) as pool:
            for result in tqdm(pool.imap_unordered(_evaluate_row, tasks), total=len(tasks), desc="lhs", disable=not show_progress):
                results.append(result)
    for failed in (r for r in results if r.error):
        logger.warning(f"sample {failed.sample} failed: {failed.error}")
    return sorted(results, key=SearchResult.sort_key)


@dataclass
class ParamSensitivity:
    name: str
    bin_means: List[float]
    spread: float
    dominant: bool = False


def sensitivity(results: Sequence[SearchResult], plan: LhsPlan, bins: int = 4, top: int = 3) -> List[ParamSensitivity]:
    """
    Per parameter, mean CE over equal-count bins of its sampled values.

    The spread (max minus min bin mean) says how much the parameter moves the
    result; the `top` widest spreads are flagged dominant.
    """
    scored = [r for r in results if r.report is not None]
    if not scored:
        return []
    ce = np.array([r.report.clustering_error for r in scored])
    rows = np.array([r.sample for r in scored])
    entries = []
    for j, name in enumerate(plan.names):
        column = plan.values[rows, j]
        groups = np.array_split(np.argsort(column, kind="stable"), min(bins, len(scored)))
        means = [float(np.mean(ce[g])) for g in groups if len(g)]
        entries.append(ParamSensitivity(name, means, max(means) - min(means)))
    entries.sort(key=lambda e: (-e.spread, e.name))
    for entry in entries[:top]:
        entry.dominant = True
    return entries


def _value(r: ParamRange, value: float) -> str:
    return str(int(value)) if r.integer_valued else f"{value:.6f}"


def format_plan(plan: LhsPlan) -> str:
    lines = ["\t".join(["sample", *plan.names])]
    for i in range(plan.k):
        lines.append("\t".join([str(i), *(_value(r, plan.values[i, j]) for j, r in enumerate(plan.ranges))]))
    return "".join(f"{line}\n" for line in lines)


def _measure(value: Union[float, int, None], digits: int = 6) -> str:
    if value is None:
        return "nan"
    return f"{value:.{digits}f}" if isinstance(value, float) else str(value)


def format_results(results: Sequence[SearchResult], plan: LhsPlan) -> str:
    lines = ["\t".join(["rank", "sample", "ce", "accuracy", "clusters", "categories", *plan.names])]
    for rank, result in enumerate(results, start=1):
        report = result.report
        lines.append(
            "\t".join(
                [
                    str(rank),
                    str(result.sample),
                    _measure(report.clustering_error if report else None),
                    _measure(report.accuracy if report else None),
                    _measure(report.n_clusters if report else None),
                    _measure(report.n_categories if report else None),
                    *(_value(r, plan.values[result.sample, j]) for j, r in enumerate(plan.ranges)),
                ]
            )
        )
    return "".join(f"{line}\n" for line in lines)


def format_sensitivity(entries: Sequence[ParamSensitivity]) -> str:
    width = max((len(e.bin_means) for e in entries), default=0)
    lines = ["\t".join(["parameter", "spread", "dominant", *(f"bin{i}" for i in range(width))])]
    for e in entries:
        lines.append("\t".join([e.name, f"{e.spread:.6f}", "yes" if e.dominant else "no", *(f"{m:.6f}" for m in e.bin_means)]))
    return "".join(f"{line}\n" for line in lines)
