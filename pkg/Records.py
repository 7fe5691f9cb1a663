import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from Errors import InputValidationError


@dataclass(frozen=True)
class PositionSample:
    """2-D agent position in meters, as replayed from SLAM."""

    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise InputValidationError(f"position ({self.x}, {self.y}) is not finite")

    def as_array(self) -> np.ndarray:
        """The position as a float vector (x, y)."""
        return np.array([self.x, self.y], dtype=float)


@dataclass(frozen=True, eq=False)
class ObjectEvidence:
    """Per-object recognition certainties, each in [0,1]."""

    r: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.r, dtype=float).reshape(-1)
        if not np.all(np.isfinite(values)) or np.any(values < 0.0) or np.any(values > 1.0):
            raise InputValidationError("object certainties must lie in [0,1]")
        values.setflags(write=False)
        object.__setattr__(self, "r", values)

    @classmethod
    def of(cls, values: Sequence[float]) -> "ObjectEvidence":
        """Evidence from any sequence of certainties."""
        return cls(np.asarray(values, dtype=float))

    def __len__(self) -> int:
        """Number of objects."""
        return int(self.r.shape[0])

    def __eq__(self, other: object) -> bool:
        """Equal when the certainties are equal element by element."""
        return isinstance(other, ObjectEvidence) and np.array_equal(self.r, other.r)

    def __hash__(self) -> int:
        """Hash of the raw certainty bytes, consistent with equality."""
        return hash(self.r.tobytes())


@dataclass(frozen=True)
class DatasetRecord:
    """One replayed sample: where the agent was, what it saw, and optionally where it truly was."""

    position: PositionSample
    evidence: ObjectEvidence
    label: Optional[str] = None


@dataclass
class SequenceFile:
    """A recorded sequence: header plus ordered records."""

    sequence_id: str
    object_names: List[str]
    records: List[DatasetRecord] = field(default_factory=list)

    @property
    def n_objects(self) -> int:
        """Length of every certainty vector in the file."""
        return len(self.object_names)

    @property
    def is_labeled(self) -> bool:
        """True when any record carries a ground-truth label."""
        return any(record.label is not None for record in self.records)

    def labels(self) -> List[Optional[str]]:
        """Labels in record order, None where a record has none."""
        return [record.label for record in self.records]
