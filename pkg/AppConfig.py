import sys
from dataclasses import dataclass, field
from pathlib import Path


def _template_dir() -> Path:
    """Locate the bundled templates, inside the pyinstaller archive when frozen."""
    base = Path(getattr(sys, "_MEIPASS", Path(__file__).resolve().parent))
    return base / "templates"


@dataclass
class AppConfig:
    """Application configuration."""

    template_dir: Path = field(default_factory=_template_dir)
    presets_file: str = "Presets.json"
    ranges_file: str = "ParamRanges.json"
    demo_world_file: str = "DemoWorld.json"
    default_preset: str = "A"
    lhs_samples: int = 100
    lhs_workers: int = 1
    overtime_tolerance: float = 0.05
    float_precision: int = 6

    @property
    def presets_path(self) -> Path:
        """Named parameter configurations."""
        return self.template_dir / self.presets_file

    @property
    def ranges_path(self) -> Path:
        """Latin Hypercube search ranges."""
        return self.template_dir / self.ranges_file

    @property
    def demo_world_path(self) -> Path:
        """World the synth command uses without --spec."""
        return self.template_dir / self.demo_world_file
