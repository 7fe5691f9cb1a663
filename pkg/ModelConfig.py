import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Optional

from Errors import InputValidationError


def _check(condition: bool, message: str) -> None:
    if not condition:
        raise InputValidationError(message)


@dataclass(frozen=True)
class SemmapConfig:
    """Parameters of the topological mapping layer."""

    activation_threshold: float = 0.5539
    learning_rate: float = 0.0139
    summation_limit: float = 5.0
    n_objects: int = 18

    def validate(self) -> "SemmapConfig":
        """Raise InputValidationError when a parameter leaves its allowed range."""
        _check(0.0 < self.activation_threshold <= 1.0, f"semmap activation_threshold {self.activation_threshold} not in (0,1]")
        _check(0.0 < self.learning_rate < 1.0, f"semmap learning_rate {self.learning_rate} not in (0,1)")
        _check(self.summation_limit > 0.0, f"semmap summation_limit {self.summation_limit} must be > 0")
        _check(self.n_objects > 0, f"semmap n_objects {self.n_objects} must be > 0")
        return self

    @property
    def creation_radius(self) -> float:
        """Distance beyond which a sample can no longer activate a node enough."""
        return 1.0 / self.activation_threshold - 1.0


@dataclass(frozen=True)
class OlarfdssomConfig:
    """Parameters of the place categorization SOM, defaults are configuration A."""

    activation_threshold: float = 0.9879
    lowest_win_fraction: float = 0.1914
    relevance_rate: float = 0.0163
    max_competitions: int = 34
    winner_rate: float = 0.0118
    neighbor_rate: float = 0.0076
    relevance_smoothness: float = 0.0781
    connection_threshold: float = 0.0301
    max_nodes: int = 40
    epsilon: float = 1e-9

    def validate(self) -> "OlarfdssomConfig":
        """Raise InputValidationError when a parameter leaves its allowed range."""
        _check(0.0 < self.activation_threshold < 1.0, f"activation_threshold {self.activation_threshold} not in (0,1)")
        _check(0.0 < self.lowest_win_fraction < 1.0, f"lowest_win_fraction {self.lowest_win_fraction} not in (0,1)")
        _check(0.0 < self.relevance_rate < 1.0, f"relevance_rate {self.relevance_rate} not in (0,1)")
        _check(self.max_competitions >= 1, f"max_competitions {self.max_competitions} must be >= 1")
        _check(0.0 < self.winner_rate < 1.0, f"winner_rate {self.winner_rate} not in (0,1)")
        _check(
            0.0 < self.neighbor_rate <= self.winner_rate,
            f"neighbor_rate {self.neighbor_rate} not in (0, winner_rate={self.winner_rate}]",
        )
        _check(self.relevance_smoothness > 0.0, f"relevance_smoothness {self.relevance_smoothness} must be > 0")
        _check(self.connection_threshold >= 0.0, f"connection_threshold {self.connection_threshold} must be >= 0")
        _check(self.max_nodes >= 1, f"max_nodes {self.max_nodes} must be >= 1")
        _check(self.epsilon > 0.0 and math.isfinite(self.epsilon), f"epsilon {self.epsilon} must be > 0")
        return self

    @property
    def prune_threshold(self) -> float:
        """Wins a node needs at a prune event to stay in the map."""
        return self.lowest_win_fraction * self.max_competitions


@dataclass(frozen=True)
class ModelConfig:
    """The pair of configurations a replay runs with."""

    semmap: SemmapConfig = field(default_factory=SemmapConfig)
    olarfdssom: OlarfdssomConfig = field(default_factory=OlarfdssomConfig)

    def validate(self) -> "ModelConfig":
        self.semmap.validate()
        self.olarfdssom.validate()
        return self

    def with_overrides(
        self,
        semmap: Optional[Dict[str, Any]] = None,
        olarfdssom: Optional[Dict[str, Any]] = None,
    ) -> "ModelConfig":
        """Return a copy with the given field values replaced and validated."""
        return ModelConfig(
            semmap=_apply(self.semmap, semmap or {}),
            olarfdssom=_apply(self.olarfdssom, olarfdssom or {}),
        ).validate()

    def as_dict(self) -> Dict[str, Dict[str, Any]]:
        return {"semmap": asdict(self.semmap), "olarfdssom": asdict(self.olarfdssom)}


def _apply(config, overrides: Dict[str, Any]):
    """Replace dataclass fields by name, coercing to the declared field type."""
    known = {f.name: f for f in fields(config)}
    values = {}
    for name, value in overrides.items():
        if value is None:
            continue
        if name not in known:
            raise InputValidationError(f"unknown {type(config).__name__} parameter '{name}'")
        default = getattr(config, name)
        try:
            if isinstance(default, int) and not isinstance(default, bool):
                as_float = float(value)
                if not as_float.is_integer():
                    raise ValueError(f"{value} is not an integer")
                values[name] = int(as_float)
            else:
                values[name] = float(value)
        except (TypeError, ValueError) as e:
            raise InputValidationError(f"bad value for {name}: {e}") from e
    return replace(config, **values)


@dataclass
class Preset:
    """A named parameter configuration shipped in templates/Presets.json."""

    name: str
    description: List[str]
    semmap: Dict[str, Any]
    olarfdssom: Dict[str, Any]

    def build(
        self,
        semmap_overrides: Optional[Dict[str, Any]] = None,
        som_overrides: Optional[Dict[str, Any]] = None,
    ) -> ModelConfig:
        """Create the model configuration for this preset with overrides applied."""
        base = ModelConfig().with_overrides(self.semmap, self.olarfdssom)
        return base.with_overrides(semmap_overrides, som_overrides)


def parse_presets(raw_data: Dict[str, Any]) -> Dict[str, Preset]:
    """
    Parse raw JSON data into Preset objects.

    Args:
        raw_data: mapping of preset name to
                  {"description": [...], "semmap": {...}, "olarfdssom": {...}}

    Returns:
        A dictionary mapping preset names to Preset objects.
    """
    presets: Dict[str, Preset] = {}
    for name, data in raw_data.items():
        if not isinstance(data, dict):
            raise InputValidationError(f"preset '{name}' must be an object")
        presets[name] = Preset(
            name=name,
            description=list(data.get("description", [])),
            semmap=dict(data.get("semmap", {})),
            olarfdssom=dict(data.get("olarfdssom", {})),
        )
    return presets


def load_presets(json_path: Path) -> Dict[str, Preset]:
    """Load the parameter presets from a JSON file."""
    try:
        raw_data = json.loads(Path(json_path).read_text(encoding="utf-8"))
    except OSError as e:
        raise InputValidationError(f"could not open presets {json_path}: {e}") from e
    except json.JSONDecodeError as e:
        raise InputValidationError(f"presets {json_path} is not valid JSON: {e}") from e
    return parse_presets(raw_data)
