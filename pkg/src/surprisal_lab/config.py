"""Pipeline configuration: a JSON file whose keys mirror the CLI flags."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .classifier import C_GRID, GAMMA_GRID
from .errors import SurprisalLabError
from .toy import bundle_path

PATH_FIELDS = ("corpus", "treebank", "grammar", "head_table", "stimuli", "out_dir")


@dataclass
class PipelineConfig:
    corpus: str | None = None
    treebank: str | None = None
    grammar: str | None = None  # design grammar for stimulus generation
    head_table: str | None = None
    stimuli: str | None = None  # defaults to <out_dir>/stimuli.csv
    out_dir: str = "out"
    order: int = 3
    pos_order: int = 3
    log_base: float = 2.0
    unk_threshold: int = 2
    smoothing: float = 0.1
    alpha: float = 0.05
    seed: int = 0
    folds: int = 10
    per_class: int = 30
    lexicalized: bool = False
    c_grid: list[float] = field(default_factory=lambda: list(C_GRID))
    gamma_grid: list[float] = field(default_factory=lambda: list(GAMMA_GRID))

    def __post_init__(self):
        self.check()

    def check(self) -> None:
        if not 1 <= self.order <= 5 or not 1 <= self.pos_order <= 5:
            raise SurprisalLabError("n-gram orders must lie in 1..5")
        if self.log_base <= 1:
            raise SurprisalLabError("log_base must be > 1")
        if self.unk_threshold < 1:
            raise SurprisalLabError("unk_threshold must be >= 1")
        if self.smoothing < 0:
            raise SurprisalLabError("smoothing must be >= 0")
        if not 0 < self.alpha < 1:
            raise SurprisalLabError("alpha must lie in (0, 1)")
        if self.folds < 2:
            raise SurprisalLabError("folds must be >= 2")
        if self.per_class < 1:
            raise SurprisalLabError("per_class must be >= 1")
        if not self.c_grid or not self.gamma_grid or min(self.c_grid + self.gamma_grid) <= 0:
            raise SurprisalLabError("C and gamma grids must be non-empty and positive")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict, base_dir=None) -> "PipelineConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        data = {k.replace("-", "_"): v for k, v in data.items()}
        unknown = sorted(set(data) - names)
        if unknown:
            raise SurprisalLabError(f"unknown config key(s): {', '.join(unknown)}")
        if base_dir is not None:
            for key in PATH_FIELDS:
                if key in data and data[key] is not None and key != "out_dir":
                    data[key] = str(Path(base_dir) / data[key])
        try:
            return cls(**data)
        except TypeError as exc:
            raise SurprisalLabError(f"bad config: {exc}") from exc

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise SurprisalLabError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from exc
        if not isinstance(data, dict):
            raise SurprisalLabError(f"{path}: config must be a JSON object")
        return cls.from_dict(data, base_dir=path.parent)

    def replace(self, **changes) -> "PipelineConfig":
        return dataclasses.replace(self, **changes)

    def path(self, key: str) -> Path:
        """Configured path, falling back to the bundled toy file."""
        value = getattr(self, key)
        if value is not None:
            return Path(value)
        defaults = {
            "corpus": "corpus.tsv",
            "treebank": "treebank.txt",
            "grammar": "design.pcfg",
            "head_table": "heads.txt",
        }
        if key == "stimuli":
            return Path(self.out_dir) / "stimuli.csv"
        return bundle_path(defaults[key])


def toy_config(**overrides) -> PipelineConfig:
    return PipelineConfig.load(bundle_path("config.json")).replace(**overrides)
