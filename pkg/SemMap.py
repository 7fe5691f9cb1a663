"""
Incremental topological map of places.

Each node stands for a place: a 2-D center adapted toward the positions that
activate it, an accumulator of object evidence capped at the summation limit,
and the normalized object vector derived from that accumulator. Consecutive
winners are connected, and every time the winner changes the object vector of
the node the agent just left is emitted for categorization training.
"""

import copy
import logging
import threading
from dataclasses import dataclass, field
from typing import List, Optional, Set, Tuple, Union

import numpy as np

from Errors import DimensionMismatchError, InputValidationError
from ModelConfig import SemmapConfig
from Records import DatasetRecord, ObjectEvidence, PositionSample

PositionLike = Union[PositionSample, np.ndarray, Tuple[float, float]]
EvidenceLike = Union[ObjectEvidence, np.ndarray]


@dataclass
class MapNode:
    """A place node: center c, capped evidence phi and object vector o."""

    id: int
    center: np.ndarray
    phi: np.ndarray
    objects: np.ndarray


@dataclass
class TrainingEmission:
    """Object vector of the departed node, sent to the categorization SOM."""

    source_node: int
    vector: np.ndarray


@dataclass
class TopoMap:
    """Graph of place nodes; edges are unordered id pairs stored as (low, high)."""

    nodes: List[MapNode] = field(default_factory=list)
    edges: Set[Tuple[int, int]] = field(default_factory=set)
    last_winner: Optional[int] = None

    def __len__(self) -> int:
        """Number of place nodes."""
        return len(self.nodes)

    def node(self, node_id: int) -> MapNode:
        """Node by id."""
        # nodes are never removed, so ids are list positions
        return self.nodes[node_id]

    def connect(self, a: int, b: int) -> bool:
        """Add the undirected edge a-b; returns False for self-loops and duplicates."""
        if a == b:
            return False
        edge = (min(a, b), max(a, b))
        if edge in self.edges:
            return False
        self.edges.add(edge)
        return True

    def centers(self) -> np.ndarray:
        """Node centers as an (n, 2) array in id order."""
        if not self.nodes:
            return np.empty((0, 2))
        return np.stack([n.center for n in self.nodes])

    def sorted_edges(self) -> List[Tuple[int, int]]:
        """Edges as (a, b) pairs with a < b, sorted."""
        return sorted(self.edges)

    def copy(self) -> "TopoMap":
        """Deep copy, safe to read while the original keeps changing."""
        return copy.deepcopy(self)


def _position(p: PositionLike) -> np.ndarray:
    if isinstance(p, PositionSample):
        return p.as_array()
    return np.asarray(p, dtype=float).reshape(2)


def _evidence(r: EvidenceLike) -> np.ndarray:
    if isinstance(r, ObjectEvidence):
        return r.r
    return np.asarray(r, dtype=float).reshape(-1)


def node_activation(p: PositionLike, c: np.ndarray) -> float:
    """Activation 1/(1+D) of a node centered at c for position p."""
    return 1.0 / (1.0 + float(np.linalg.norm(_position(p) - np.asarray(c, dtype=float))))


def find_winner(topo: TopoMap, p: PositionLike) -> Optional[Tuple[int, float]]:
    """Most activated node and its activation, None on an empty map; ties go to the lowest id."""
    if not topo.nodes:
        return None
    distances = np.linalg.norm(topo.centers() - _position(p), axis=1)
    activations = 1.0 / (1.0 + distances)
    index = int(np.argmax(activations))
    return topo.nodes[index].id, float(activations[index])


def recompute_objects(node: MapNode, s_t: float) -> MapNode:
    """o_i = log(1+phi_i) / log(1+s_t)."""
    node.objects = np.log1p(node.phi) / np.log1p(s_t)
    return node


def accumulate_evidence(node: MapNode, r: EvidenceLike, s_t: float) -> MapNode:
    """Add r to phi componentwise, capped at s_t, then refresh the object vector."""
    values = _evidence(r)
    if values.shape != node.phi.shape:
        raise DimensionMismatchError(node.phi.shape[0], values.shape[0])
    node.phi = np.minimum(s_t, node.phi + values)
    return recompute_objects(node, s_t)


def update_center(node: MapNode, p: PositionLike, e: float) -> MapNode:
    """Move the center a fraction e toward p."""
    node.center = node.center + e * (_position(p) - node.center)
    return node


def _create_node(topo: TopoMap, p: np.ndarray, r: np.ndarray, cfg: SemmapConfig) -> MapNode:
    node = MapNode(
        id=len(topo.nodes),
        center=p.copy(),
        phi=np.clip(r, 0.0, cfg.summation_limit),
        objects=np.zeros_like(r),
    )
    recompute_objects(node, cfg.summation_limit)
    topo.nodes.append(node)
    return node


def process_sample(
    topo: TopoMap, p: PositionLike, r: EvidenceLike, cfg: SemmapConfig
) -> Optional[TrainingEmission]:
    """
    Present one (position, evidence) sample to the map.

    The map is updated in place. Returns the emission produced when the winning
    node changed (including a newly created node), otherwise None. The emitted
    vector is a copy of the previous winner's object vector taken before the
    last-winner pointer moves.
    """
    position = _position(p)
    if not np.all(np.isfinite(position)):
        raise InputValidationError(f"position {position.tolist()} is not finite")
    evidence = _evidence(r)
    if evidence.shape[0] != cfg.n_objects:
        raise DimensionMismatchError(cfg.n_objects, evidence.shape[0])

    previous = topo.last_winner
    winner = find_winner(topo, position)

    if winner is None or winner[1] < cfg.activation_threshold:
        node = _create_node(topo, position, evidence, cfg)
        current = node.id
    else:
        node = topo.node(winner[0])
        accumulate_evidence(node, evidence, cfg.summation_limit)
        update_center(node, position, cfg.learning_rate)
        current = node.id

    emission = None
    if previous is not None and current != previous:
        topo.connect(current, previous)
        emission = TrainingEmission(previous, topo.node(previous).objects.copy())
    topo.last_winner = current
    return emission


class SemMap:
    """Serialized writer around a TopoMap with snapshot access for concurrent readers."""

    def __init__(self, config: SemmapConfig, topo: Optional[TopoMap] = None) -> None:
        self.config = config.validate()
        self.topo = topo if topo is not None else TopoMap()
        self.logger = logging.getLogger(__name__)
        self._lock = threading.Lock()

    def process(self, record: DatasetRecord) -> Optional[TrainingEmission]:
        """Process one dataset record; see process_sample."""
        return self.process_sample(record.position, record.evidence)

    def process_sample(self, p: PositionLike, r: EvidenceLike) -> Optional[TrainingEmission]:
        """Thread-safe process_sample on the owned map."""
        with self._lock:
            count = len(self.topo.nodes)
            emission = process_sample(self.topo, p, r, self.config)
            if len(self.topo.nodes) > count:
                self.logger.debug(f"created place node {self.topo.last_winner}")
            return emission

    @property
    def last_winner(self) -> Optional[int]:
        """Winner of the latest sample, None before the first one."""
        return self.topo.last_winner

    def snapshot(self) -> TopoMap:
        """Consistent deep copy of the map, safe to read while ingestion continues."""
        with self._lock:
            return self.topo.copy()

    def __len__(self) -> int:
        """Number of place nodes."""
        return len(self.topo)
