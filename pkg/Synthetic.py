import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from Errors import InputValidationError
from Records import DatasetRecord, ObjectEvidence, PositionSample, SequenceFile

logger = logging.getLogger(__name__)

PRECISION = 6


@dataclass(frozen=True)
class Room:
    """Axis-aligned rectangle carrying a place category."""

    name: str
    category: str
    x0: float
    y0: float
    x1: float
    y1: float

    def contains(self, p: np.ndarray) -> bool:
        return self.x0 <= p[0] <= self.x1 and self.y0 <= p[1] <= self.y1

    def distance(self, p: np.ndarray) -> float:
        dx = max(self.x0 - p[0], 0.0, p[0] - self.x1)
        dy = max(self.y0 - p[1], 0.0, p[1] - self.y1)
        return float(np.hypot(dx, dy))

    def overlaps(self, other: "Room") -> bool:
        return min(self.x1, other.x1) > max(self.x0, other.x0) and min(self.y1, other.y1) > max(self.y0, other.y0)


@dataclass
class SynthSpec:
    """A synthetic world and the path walked through it."""

    object_names: List[str]
    rooms: List[Room]
    signatures: Dict[str, List[float]]
    waypoints: List[Tuple[float, float]]
    samples_per_leg: int = 100
    noise: float = 0.05
    laps: int = 1
    closed: bool = True
    smear: float = 0.0
    seed: int = 0
    sequence_id: str = "synthetic"
    labeled: bool = True

    def validate(self) -> "SynthSpec":
        n = len(self.object_names)
        if n == 0:
            raise InputValidationError("synthetic world lists no objects")
        if not self.rooms:
            raise InputValidationError("synthetic world has no rooms")
        for room in self.rooms:
            if not (room.x0 < room.x1 and room.y0 < room.y1):
                raise InputValidationError(f"room '{room.name}' has an empty extent")
            if room.category not in self.signatures:
                raise InputValidationError(f"no signature for category '{room.category}'")
        for i, a in enumerate(self.rooms):
            for b in self.rooms[i + 1 :]:
                if a.overlaps(b):
                    raise InputValidationError(f"rooms '{a.name}' and '{b.name}' overlap")
        for category, signature in self.signatures.items():
            values = np.asarray(signature, dtype=float)
            if values.shape != (n,):
                raise InputValidationError(f"signature of '{category}' has {values.size} values, expected {n}")
            if np.any(values < 0.0) or np.any(values > 1.0):
                raise InputValidationError(f"signature of '{category}' leaves [0,1]")
        if len(self.waypoints) < 2:
            raise InputValidationError("a path needs at least two waypoints")
        for waypoint in self.waypoints:
            p = np.asarray(waypoint, dtype=float)
            if not any(room.contains(p) for room in self.rooms):
                raise InputValidationError(f"waypoint {tuple(waypoint)} is outside all rooms")
        if self.samples_per_leg < 1 or self.laps < 1:
            raise InputValidationError("samples_per_leg and laps must be >= 1")
        if self.noise < 0.0 or self.smear < 0.0:
            raise InputValidationError("noise and smear must be >= 0")
        return self

    def room_at(self, p: np.ndarray) -> Room:
        """Containing room, first listed on shared walls; nearest room for points between rooms."""
        for room in self.rooms:
            if room.contains(p):
                return room
        return min(self.rooms, key=lambda room: room.distance(p))


def _signature(spec: SynthSpec, room: Room, p: np.ndarray) -> np.ndarray:
    own = np.asarray(spec.signatures[room.category], dtype=float)
    if spec.smear <= 0.0:
        return own
    blended = own.copy()
    total = 1.0
    for other in spec.rooms:
        if other is room:
            continue
        weight = 1.0 - other.distance(p) / spec.smear
        if weight > 0.0:
            blended += weight * np.asarray(spec.signatures[other.category], dtype=float)
            total += weight
    return blended / total


def _path(spec: SynthSpec) -> List[np.ndarray]:
    points = [np.asarray(w, dtype=float) for w in spec.waypoints]
    legs = list(zip(points, points[1:]))
    if spec.closed:
        legs.append((points[-1], points[0]))
    positions = []
    for _ in range(spec.laps):
        for a, b in legs:
            for k in range(spec.samples_per_leg):
                positions.append(a + (k / spec.samples_per_leg) * (b - a))
    if not spec.closed:
        positions.append(points[-1])
    return positions


def generate_synthetic(spec: SynthSpec) -> SequenceFile:
    """
    Walk the waypoints and record one sample per path step.

    Evidence is the signature of the containing room (blended with nearby
    rooms when smearing is on) plus uniform noise in [-noise, noise], clipped
    to [0,1]. Values are rounded to the file precision so the generated
    records equal what a reader parses back. Deterministic per seed.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    n = len(spec.object_names)
    records = []
    for p in _path(spec):
        room = spec.room_at(p)
        signature = _signature(spec, room, p)
        evidence = np.clip(signature + rng.uniform(-spec.noise, spec.noise, n), 0.0, 1.0)
        records.append(
            DatasetRecord(
                PositionSample(round(float(p[0]), PRECISION), round(float(p[1]), PRECISION)),
                ObjectEvidence(np.round(evidence, PRECISION)),
                room.category if spec.labeled else None,
            )
        )
    logger.info(f"generated {len(records)} records for '{spec.sequence_id}' (seed {spec.seed})")
    return SequenceFile(spec.sequence_id, list(spec.object_names), records)


def parse_synth_spec(data: Dict[str, Any], overrides: Optional[Dict[str, Any]] = None) -> SynthSpec:
    """Build a SynthSpec from its JSON form, with optional top-level overrides."""
    data = {**data, **{k: v for k, v in (overrides or {}).items() if v is not None}}
    try:
        rooms = [
            Room(
                name=str(raw["name"]),
                category=str(raw.get("category", raw["name"])),
                x0=float(raw["x0"]),
                y0=float(raw["y0"]),
                x1=float(raw["x1"]),
                y1=float(raw["y1"]),
            )
            for raw in data["rooms"]
        ]
        object_names = [str(name) for name in data["objects"]]
        signatures = {}
        for category, raw in data["signatures"].items():
            if isinstance(raw, dict):
                # sparse form: object name -> certainty
                unknown = set(raw) - set(object_names)
                if unknown:
                    raise InputValidationError(f"signature of '{category}' names unknown objects {sorted(unknown)}")
                signatures[category] = [float(raw.get(name, 0.0)) for name in object_names]
            else:
                signatures[category] = [float(v) for v in raw]
        spec = SynthSpec(
            object_names=object_names,
            rooms=rooms,
            signatures=signatures,
            waypoints=[(float(x), float(y)) for x, y in data["waypoints"]],
            samples_per_leg=int(data.get("samples_per_leg", 100)),
            noise=float(data.get("noise", 0.05)),
            laps=int(data.get("laps", 1)),
            closed=bool(data.get("closed", True)),
            smear=float(data.get("smear", 0.0)),
            seed=int(data.get("seed", 0)),
            sequence_id=str(data.get("sequence_id", "synthetic")),
            labeled=bool(data.get("labeled", True)),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise InputValidationError(f"malformed synthetic world: {e}") from e
    return spec.validate()


def load_synth_spec(path: Path, overrides: Optional[Dict[str, Any]] = None) -> SynthSpec:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as e:
        raise InputValidationError(f"could not open synthetic world {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise InputValidationError(f"synthetic world {path} is not valid JSON: {e}") from e
    return parse_synth_spec(data, overrides)
