"""Experiment configuration with exact JSON round-trip."""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path


@dataclass(frozen=True)
class ExperimentConfig:
    n: int = 5
    n_bins: int = 46
    noise_kind: str = "pauli2"
    noise_center: float = 1e-2
    noise_halfwidth: float = 1e-3
    noise_seed: int | None = None  # None: derived from ``seed``
    count_z: int = 1000
    count_x: int = 1000
    depth_range: tuple[int, int] = (1, 4)
    x_depth_range: tuple[int, int] = (1, 3)
    max_retries: int = 5
    shots: int = 100_000
    cutoff: float = 0.1
    method: str = "pinv"
    seed: int = 0
    out_dir: str = "out"
    workers: int = 1
    hist_bins: int = 50
    hist_max: float = 0.25

    def __post_init__(self):
        for name in ("depth_range", "x_depth_range"):
            object.__setattr__(self, name, tuple(int(v) for v in getattr(self, name)))
        if self.n < 1 or self.n_bins < 1 or self.shots < 1:
            raise ValueError("n, n_bins and shots must be positive")
        if self.count_z < 0 or self.count_x < 0 or self.count_z + self.count_x < 1:
            raise ValueError("circuit counts must be non-negative with at least one circuit")
        lo, hi = self.depth_range
        if not 1 <= lo <= hi:
            raise ValueError(f"z depth range must satisfy 1 <= lo <= hi, got {self.depth_range}")
        lo, hi = self.x_depth_range
        if not 0 <= lo <= hi:
            raise ValueError(f"x depth range must satisfy 0 <= lo <= hi, got {self.x_depth_range}")
        if self.noise_kind != "pauli2":
            raise ValueError(f"unknown noise kind {self.noise_kind!r}")
        if not 0 < self.cutoff < 1:
            raise ValueError("cutoff must lie in (0, 1)")
        if self.method not in ("pinv", "nnls"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.workers < 1 or self.hist_bins < 1 or self.hist_max <= 0:
            raise ValueError("workers, hist_bins and hist_max must be positive")

    def replace(self, **changes) -> ExperimentConfig:
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        for name in ("depth_range", "x_depth_range"):
            d[name] = list(d[name])
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> ExperimentConfig:
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> ExperimentConfig:
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path) -> ExperimentConfig:
        return cls.from_json(Path(path).read_text())


def desk_scale(**changes) -> ExperimentConfig:
    """Five-qubit setting with 1000 circuits per kind and the uniform [0.009, 0.011] noise.

    The x circuits carry the full U+ layer (21 gates at n = 5), so their
    eigenvalues sit near 0.02; the cutoff is lowered to keep those rows.
    """
    return ExperimentConfig(cutoff=0.003).replace(**changes)
