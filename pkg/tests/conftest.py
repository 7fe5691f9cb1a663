from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import pytest

from AppConfig import AppConfig
from ModelConfig import ModelConfig, OlarfdssomConfig, SemmapConfig
from Records import DatasetRecord, ObjectEvidence, PositionSample, SequenceFile
from Synthetic import Room, SynthSpec

OBJECTS = [f"obj{i}" for i in range(18)]
# each category owns three objects: dims 3k..3k+2
CATEGORIES = ["kitchen", "office", "bathroom", "lounge", "printer_area", "corridor"]


@pytest.fixture
def app_config() -> AppConfig:
    return AppConfig()


@pytest.fixture
def semmap_config() -> SemmapConfig:
    return SemmapConfig(n_objects=3)


@pytest.fixture
def som_config() -> OlarfdssomConfig:
    return OlarfdssomConfig()


@pytest.fixture
def category_pattern() -> Callable[[int, np.random.Generator, float], np.ndarray]:
    """18-dimensional pattern of category k: 0.9 on dims 3k..3k+2, uniform noise, clipped."""

    def make(k: int, rng: np.random.Generator, noise: float = 0.05) -> np.ndarray:
        base = np.zeros(18)
        base[3 * k : 3 * k + 3] = 0.9
        if noise > 0.0:
            base = base + rng.uniform(-noise, noise, 18)
        return np.clip(base, 0.0, 1.0)

    return make


def loop_world(
    categories: Sequence[str],
    seed: int = 0,
    laps: int = 3,
    samples_per_leg: int = 50,
    sequence_id: str = "loop",
    noise: float = 0.05,
) -> SynthSpec:
    """Four 5 m rooms in a 2x2 block, walked around the block center."""
    boxes = [(0, 0, 5, 5), (5, 0, 10, 5), (5, 5, 10, 10), (0, 5, 5, 10)]
    rooms = [Room(f"room{i}", categories[i], *box) for i, box in enumerate(boxes)]
    signatures = {}
    for category in dict.fromkeys(categories):
        k = CATEGORIES.index(category)
        signature = [0.0] * 18
        for d in range(3 * k, 3 * k + 3):
            signature[d] = 0.9
        signatures[category] = signature
    return SynthSpec(
        object_names=list(OBJECTS),
        rooms=rooms,
        signatures=signatures,
        waypoints=[(2.5, 2.5), (7.5, 2.5), (7.5, 7.5), (2.5, 7.5)],
        samples_per_leg=samples_per_leg,
        noise=noise,
        laps=laps,
        seed=seed,
        sequence_id=sequence_id,
    )


@pytest.fixture
def make_loop_world() -> Callable[..., SynthSpec]:
    return loop_world


@pytest.fixture
def model_config() -> ModelConfig:
    return ModelConfig()


@pytest.fixture
def tiny_sequence() -> SequenceFile:
    records = [
        DatasetRecord(PositionSample(0.0, 0.0), ObjectEvidence.of([0.9, 0.0, 0.1]), "kitchen"),
        DatasetRecord(PositionSample(0.5, 0.0), ObjectEvidence.of([0.8, 0.1, 0.0]), "kitchen"),
        DatasetRecord(PositionSample(5.0, 0.0), ObjectEvidence.of([0.0, 0.9, 0.2]), "office"),
    ]
    return SequenceFile("tiny", ["stove", "desk", "chair"], records)


@pytest.fixture
def write_text(tmp_path: Path) -> Callable[[str, str], Path]:
    def write(name: str, text: str) -> Path:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return write
