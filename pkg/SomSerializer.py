import json
from dataclasses import asdict
from pathlib import Path
from typing import Any, Dict, List, Tuple

import numpy as np

from Errors import InputValidationError, SemanticMapError
from ModelConfig import OlarfdssomConfig
from Olarfdssom import SomMap, SomNode

FORMAT_NAME = "olarfdssom-state"
FORMAT_VERSION = 1
ENCODINGS = ("fixed6", "hex")


class SomSerializer:
    """
    Versioned map-state documents.

    Floats are stored as strings: `fixed6` prints six decimals (lossy, for
    inspection), `hex` uses float.hex (lossless). Loading and dumping again
    reproduces the document text exactly in both encodings.
    """

    def __init__(self, encoding: str = "fixed6") -> None:
        if encoding not in ENCODINGS:
            raise InputValidationError(f"unknown float encoding '{encoding}', expected one of {ENCODINGS}")
        self.encoding = encoding

    def _encode(self, value: float) -> str:
        if self.encoding == "hex":
            return float(value).hex()
        return f"{float(value):.6f}"

    @staticmethod
    def _decode(text: str) -> float:
        if "x" in text.lower():
            return float.fromhex(text)
        return float(text)

    def _vector(self, values: np.ndarray) -> List[str]:
        return [self._encode(v) for v in values]

    def to_document(self, som: SomMap, config: OlarfdssomConfig) -> Dict[str, Any]:
        return {
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            "encoding": self.encoding,
            "config": asdict(config),
            "nwins": som.nwins,
            "next_id": som.next_id,
            "dimension": som.dimension,
            "nodes": [
                {
                    "id": node.id,
                    "wins": self._encode(node.wins),
                    "center": self._vector(node.center),
                    "delta": self._vector(node.delta),
                    "relevance": self._vector(node.relevance),
                }
                for node in som.nodes
            ],
            "connections": [list(pair) for pair in sorted(som.connections)],
        }

    def dumps(self, som: SomMap, config: OlarfdssomConfig) -> str:
        return json.dumps(self.to_document(som, config), indent=2) + "\n"

    def from_document(self, document: Dict[str, Any]) -> Tuple[SomMap, OlarfdssomConfig]:
        if document.get("format") != FORMAT_NAME:
            raise InputValidationError(f"not an {FORMAT_NAME} document")
        if document.get("version") != FORMAT_VERSION:
            raise InputValidationError(f"unsupported state version {document.get('version')}")
        try:
            config = OlarfdssomConfig(**document["config"]).validate()
            nodes = [
                SomNode(
                    id=int(raw["id"]),
                    center=np.array([self._decode(v) for v in raw["center"]]),
                    delta=np.array([self._decode(v) for v in raw["delta"]]),
                    relevance=np.array([self._decode(v) for v in raw["relevance"]]),
                    wins=self._decode(raw["wins"]),
                )
                for raw in document["nodes"]
            ]
            som = SomMap(
                nodes=nodes,
                connections={(int(a), int(b)) for a, b in document["connections"]},
                nwins=int(document["nwins"]),
                next_id=int(document["next_id"]),
                dimension=document.get("dimension"),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise InputValidationError(f"malformed SOM state: {e}") from e
        live = {n.id for n in nodes}
        if any(a not in live or b not in live for a, b in som.connections):
            raise InputValidationError("SOM state has connections to missing nodes")
        return som, config

    def loads(self, text: str) -> Tuple[SomMap, OlarfdssomConfig]:
        try:
            document = json.loads(text)
        except json.JSONDecodeError as e:
            raise InputValidationError(f"SOM state is not valid JSON: {e}") from e
        encoding = document.get("encoding", self.encoding)
        if encoding not in ENCODINGS:
            raise InputValidationError(f"unknown float encoding '{encoding}' in SOM state")
        self.encoding = encoding
        return self.from_document(document)

    def save(self, som: SomMap, config: OlarfdssomConfig, path: Path) -> Path:
        path = Path(path)
        try:
            path.write_text(self.dumps(som, config), encoding="utf-8", newline="\n")
        except OSError as e:
            raise SemanticMapError(f"could not write SOM state {path}: {e}") from e
        return path

    def load(self, path: Path) -> Tuple[SomMap, OlarfdssomConfig]:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise InputValidationError(f"could not read SOM state {path}: {e}") from e
        return self.loads(text)
