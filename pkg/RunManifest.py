import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

from Errors import InputValidationError


@dataclass
class RunManifest:
    """Everything a run needs to be reproduced: parameters, inputs, seed and outputs."""

    inputs: List[Path]
    output_dir: Path
    preset: str = "A"
    semmap: Dict[str, Any] = field(default_factory=dict)
    olarfdssom: Dict[str, Any] = field(default_factory=dict)
    seed: Optional[int] = None
    shuffle: bool = False
    checkpoints: bool = True
    online_categorization: bool = False
    state_encoding: str = "fixed6"

    def validate(self) -> "RunManifest":
        """All referenced input files must exist before anything runs."""
        if not self.inputs:
            raise InputValidationError("the manifest lists no input sequences")
        missing = [str(p) for p in self.inputs if not Path(p).is_file()]
        if missing:
            raise InputValidationError(f"missing input files: {', '.join(missing)}")
        if self.shuffle and self.seed is None:
            raise InputValidationError("a shuffled run needs a seed")
        return self

    @classmethod
    def from_dict(cls, data: Dict[str, Any], base_dir: Path = Path(".")) -> "RunManifest":
        """Relative paths in the document are resolved against base_dir."""
        try:
            return cls(
                inputs=[base_dir / str(p) for p in data["inputs"]],
                output_dir=base_dir / str(data.get("output_dir", "out")),
                preset=str(data.get("preset", "A")),
                semmap=dict(data.get("semmap", {})),
                olarfdssom=dict(data.get("olarfdssom", {})),
                seed=None if data.get("seed") is None else int(data["seed"]),
                shuffle=bool(data.get("shuffle", False)),
                checkpoints=bool(data.get("checkpoints", True)),
                online_categorization=bool(data.get("online_categorization", False)),
                state_encoding=str(data.get("state_encoding", "fixed6")),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise InputValidationError(f"malformed manifest: {e}") from e

    @classmethod
    def load(cls, path: Path) -> "RunManifest":
        """Read a JSON manifest file."""
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except OSError as e:
            raise InputValidationError(f"could not open manifest {path}: {e}") from e
        except json.JSONDecodeError as e:
            raise InputValidationError(f"manifest {path} is not valid JSON: {e}") from e
        return cls.from_dict(data, base_dir=path.parent)
