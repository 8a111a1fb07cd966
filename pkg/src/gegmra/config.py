"""Run configuration: built-in defaults < config file < command-line flags."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Dict, Optional

from .pipeline import PipelineSettings
from .powersys import LineModel, SourceParams

OUTPUT_DIR_ENV = "GEGMRA_OUTPUT_DIR"


@dataclass(frozen=True)
class RunConfig:
    sample_rate: float = 7680.0
    fundamental: float = 60.0
    detection_level: int = 1
    location_level: int = 3
    threshold_multiplier: float = 5.0
    prefault_cycles: int = 3
    phase_ratio: float = 0.05
    detection_mode: str = "superimposed"
    duration_cycles: int = 8
    line: LineModel = field(default_factory=LineModel)
    source: SourceParams = field(default_factory=SourceParams)
    output_dir: str = "."

    @property
    def samples_per_cycle(self) -> int:
        return int(round(self.sample_rate / self.fundamental))

    def pipeline_settings(self) -> PipelineSettings:
        return PipelineSettings(
            detection_level=self.detection_level,
            location_level=self.location_level,
            multiplier=self.threshold_multiplier,
            prefault_cycles=self.prefault_cycles,
            phase_ratio=self.phase_ratio,
            detection_mode=self.detection_mode,
            line=self.line,
        )

    def updated(self, values: Dict[str, Any]) -> "RunConfig":
        """Copy with overrides; ``None`` values are ignored."""
        known = {f.name for f in fields(self)}
        kw = {}
        for k, v in values.items():
            if v is None:
                continue
            if k not in known:
                raise ValueError(f"unknown configuration key {k!r}")
            if k == "line" and isinstance(v, dict):
                v = replace(self.line, **v)
            elif k == "source" and isinstance(v, dict):
                v = SourceParams.from_dict({**self.source.to_dict(), **v})
            kw[k] = v
        return replace(self, **kw)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["line"] = asdict(self.line)
        d["source"] = self.source.to_dict()
        return d


def load_config(path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    cfg = RunConfig()
    env_dir = os.environ.get(OUTPUT_DIR_ENV)
    if env_dir:
        cfg = replace(cfg, output_dir=env_dir)
    if path:
        with open(path) as fh:
            cfg = cfg.updated(json.load(fh))
    if overrides:
        cfg = cfg.updated(overrides)
    return cfg
