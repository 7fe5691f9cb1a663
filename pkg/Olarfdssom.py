"""
Online subspace-clustering self-organizing map for place categories.

Nodes are created when no node is activated above the threshold, adapted
(center, distance average and relevance) when one is, and pruned every
max_competitions competitions when their win count stays below
lp * max_competitions. Surviving nodes keep their win counts across prune
events, so a category that was once well established is never forgotten
because it has not been visited recently.

Clustering is a pure read: the winner id of the pattern.
"""

import copy
import logging
import threading
from dataclasses import dataclass, field
from typing import List, Optional, Set, Tuple

import numpy as np
from scipy.special import expit

from Errors import DimensionMismatchError, EmptyMapError, InputValidationError
from ModelConfig import OlarfdssomConfig


@dataclass
class SomNode:
    """Prototype with center c, distance moving average delta, relevance omega and wins."""

    id: int
    center: np.ndarray
    delta: np.ndarray
    relevance: np.ndarray
    wins: float = 0.0


@dataclass
class SomMap:
    """Nodes in ascending id order, undirected connections and the competition counter."""

    nodes: List[SomNode] = field(default_factory=list)
    connections: Set[Tuple[int, int]] = field(default_factory=set)
    nwins: int = 1
    next_id: int = 0
    dimension: Optional[int] = None

    def __len__(self) -> int:
        return len(self.nodes)

    def node(self, node_id: int) -> SomNode:
        for node in self.nodes:
            if node.id == node_id:
                return node
        raise KeyError(node_id)

    def neighbors(self, node_id: int) -> List[int]:
        found = []
        for a, b in self.connections:
            if a == node_id:
                found.append(b)
            elif b == node_id:
                found.append(a)
        return sorted(found)

    def copy(self) -> "SomMap":
        return copy.deepcopy(self)


def _pattern(x) -> np.ndarray:
    return np.asarray(x, dtype=float).reshape(-1)


def _check_dimension(x: np.ndarray, expected: int) -> None:
    if x.shape[0] != expected:
        raise DimensionMismatchError(expected, x.shape[0], "input pattern")


def weighted_distance(x, node: SomNode) -> float:
    """sqrt(sum_i omega_i (x_i - c_i)^2)."""
    x = _pattern(x)
    _check_dimension(x, node.center.shape[0])
    return float(np.sqrt(np.sum(node.relevance * (x - node.center) ** 2)))


def som_activation(x, node: SomNode, epsilon: float) -> float:
    """sum(omega) / (sum(omega) + weighted distance + epsilon); 1 at zero distance up to epsilon."""
    total = float(np.sum(node.relevance))
    return total / (total + weighted_distance(x, node) + epsilon)


def _activations(som: SomMap, x: np.ndarray, epsilon: float) -> np.ndarray:
    centers = np.stack([n.center for n in som.nodes])
    relevances = np.stack([n.relevance for n in som.nodes])
    distances = np.sqrt(np.sum(relevances * (x - centers) ** 2, axis=1))
    totals = np.sum(relevances, axis=1)
    return totals / (totals + distances + epsilon)


def som_find_winner(som: SomMap, x, epsilon: float = 1e-9) -> Tuple[int, float]:
    """Highest activation node and its activation; ties go to the lowest id."""
    if not som.nodes:
        raise EmptyMapError()
    x = _pattern(x)
    _check_dimension(x, som.nodes[0].center.shape[0])
    activations = _activations(som, x, epsilon)
    index = int(np.argmax(activations))
    return som.nodes[index].id, float(activations[index])


def relevance_from_delta(delta: np.ndarray, smoothness: float) -> np.ndarray:
    """Inverse logistic ramp: stable dimensions (small delta) get relevance near 1."""
    spread = float(np.max(delta) - np.min(delta))
    if spread == 0.0:
        return np.ones_like(delta)
    return expit(-(delta - np.mean(delta)) / (smoothness * spread))


def _adapt_node(node: SomNode, x: np.ndarray, rate: float, cfg: OlarfdssomConfig) -> None:
    step = cfg.relevance_rate * rate
    node.delta = (1.0 - step) * node.delta + step * np.abs(x - node.center)
    node.relevance = relevance_from_delta(node.delta, cfg.relevance_smoothness)
    node.center = node.center + rate * (x - node.center)


def adapt(som: SomMap, winner_id: int, x, cfg: OlarfdssomConfig) -> SomMap:
    """Move the winner (rate e_b) and its connected neighbors (rate e_n) toward x and count the win."""
    x = _pattern(x)
    winner = som.node(winner_id)
    _adapt_node(winner, x, cfg.winner_rate, cfg)
    for neighbor_id in som.neighbors(winner_id):
        _adapt_node(som.node(neighbor_id), x, cfg.neighbor_rate, cfg)
    winner.wins += 1
    return som


def _connected(a: SomNode, b: SomNode, cfg: OlarfdssomConfig) -> bool:
    return float(np.sum(np.abs(a.relevance - b.relevance))) < cfg.connection_threshold * a.relevance.shape[0]


def _connect_node(som: SomMap, node: SomNode, cfg: OlarfdssomConfig) -> None:
    for other in som.nodes:
        if other.id != node.id and _connected(node, other, cfg):
            som.connections.add((min(node.id, other.id), max(node.id, other.id)))


def update_connections(som: SomMap, cfg: OlarfdssomConfig) -> SomMap:
    """Rebuild every connection from the relevance-difference rule."""
    som.connections = set()
    for i, a in enumerate(som.nodes):
        for b in som.nodes[i + 1 :]:
            if _connected(a, b, cfg):
                som.connections.add((a.id, b.id))
    return som


def maybe_prune(som: SomMap, cfg: OlarfdssomConfig) -> List[int]:
    """
    Remove under-winning nodes once nwins reaches max_competitions.

    Survivors keep their win counts. Returns the removed ids.
    """
    if som.nwins < cfg.max_competitions:
        return []
    threshold = cfg.prune_threshold
    removed = [n.id for n in som.nodes if n.wins < threshold]
    som.nodes = [n for n in som.nodes if n.wins >= threshold]
    update_connections(som, cfg)
    som.nwins = 0
    return removed


def _new_node(som: SomMap, x: np.ndarray, wins: float) -> SomNode:
    node = SomNode(
        id=som.next_id,
        center=x.copy(),
        delta=np.zeros_like(x),
        relevance=np.ones_like(x),
        wins=wins,
    )
    som.next_id += 1
    som.nodes.append(node)
    return node


def train(som: SomMap, x, cfg: OlarfdssomConfig) -> SomMap:
    """One self-organization step on pattern x; see the module docstring."""
    x = _pattern(x)
    if som.dimension is not None:
        _check_dimension(x, som.dimension)
    if not np.all(np.isfinite(x)) or np.any(x < 0.0) or np.any(x > 1.0):
        raise InputValidationError("training pattern components must lie in [0,1]")
    if som.dimension is None:
        som.dimension = x.shape[0]

    if not som.nodes and som.next_id == 0:
        _new_node(som, x, wins=0.0)
        return som

    if not som.nodes:
        _new_node(som, x, wins=cfg.lowest_win_fraction * som.nwins)
    else:
        winner_id, activation = som_find_winner(som, x, cfg.epsilon)
        if activation < cfg.activation_threshold and len(som.nodes) < cfg.max_nodes:
            node = _new_node(som, x, wins=cfg.lowest_win_fraction * som.nwins)
            _connect_node(som, node, cfg)
        else:
            adapt(som, winner_id, x, cfg)

    maybe_prune(som, cfg)
    som.nwins += 1
    return som


def cluster(som: SomMap, x, epsilon: float = 1e-9) -> int:
    """Cluster id of pattern x; never mutates the map."""
    if not som.nodes:
        raise EmptyMapError()
    return som_find_winner(som, x, epsilon)[0]


class Olarfdssom:
    """Single-writer trainer with atomic snapshots for concurrent categorization."""

    def __init__(self, config: OlarfdssomConfig, som: Optional[SomMap] = None) -> None:
        self.config = config.validate()
        self.som = som if som is not None else SomMap()
        self.trainings = 0
        self.prune_events = 0
        self.logger = logging.getLogger(__name__)
        self._lock = threading.Lock()

    def train(self, x) -> None:
        with self._lock:
            before = {n.id for n in self.som.nodes}
            initializing = not self.som.nodes and self.som.next_id == 0
            will_prune = not initializing and self.som.nwins >= self.config.max_competitions
            train(self.som, x, self.config)
            self.trainings += 1
            if will_prune:
                self.prune_events += 1
            if self.logger.isEnabledFor(logging.DEBUG):
                after = {n.id for n in self.som.nodes}
                if after - before:
                    self.logger.debug(f"created category nodes {sorted(after - before)}")
                if before - after:
                    self.logger.debug(f"pruned category nodes {sorted(before - after)}")

    def cluster(self, x) -> int:
        with self._lock:
            return cluster(self.som, x, self.config.epsilon)

    def cluster_many(self, patterns) -> List[int]:
        """Cluster several patterns against one consistent state."""
        with self._lock:
            return [cluster(self.som, x, self.config.epsilon) for x in patterns]

    def snapshot(self) -> SomMap:
        with self._lock:
            return self.som.copy()

    def __len__(self) -> int:
        return len(self.som)
