"""Analytic simulation of FLO-twirled noisy circuits and shot sampling.

Twirled noise commutes with every FLO gate, so a circuit's degree-k
eigenvalue is the product of its gates' degree-k eigenvalues and its Born
distribution follows from a Kravchuk transform. No state vectors are used.
"""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .design import FacesModel
from .kravchuk import BornDistribution, circuit_eigs_to_born

# Stream tag mixed into per-circuit seeds so shot streams never collide with
# the streams used for model/ensemble generation.
SHOT_STREAM = 0x5407


def circuit_eigenvalues(model: FacesModel, j: int) -> np.ndarray:
    row = model.design.A[j]
    xi = model.noise.xi
    lam = np.ones(2 * model.n + 1)
    for g, count in zip(model.design.gates, row):
        if count:
            lam *= xi[g] ** count
    lam[0] = 1.0
    return lam


def exact_born(model: FacesModel, j: int, lam: np.ndarray | None = None) -> BornDistribution:
    if lam is None:
        lam = circuit_eigenvalues(model, j)
    return circuit_eigs_to_born(lam, model.circuits[j].kind, model.n)


def exact_born_all(model: FacesModel) -> list[BornDistribution]:
    lam = model.eigenvalue_table()
    return [exact_born(model, j, lam[j]) for j in range(len(model.circuits))]


@dataclass(frozen=True, eq=False)
class ShotRecord:
    circuit_id: int
    kind: str
    n: int
    counts: np.ndarray
    shots: int

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.sum() != self.shots:
            raise ValueError(f"counts sum to {counts.sum()}, expected {self.shots}")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    def labels(self) -> list[str]:
        return BornDistribution.from_vector(self.kind, self.n, np.zeros(len(self.counts))).labels()


def sample_shots(P: BornDistribution, shots: int, rng: np.random.Generator, circuit_id: int = 0) -> ShotRecord:
    if shots < 1:
        raise ValueError("shots must be >= 1")
    p = np.clip(P.vector(), 0.0, None)
    counts = rng.multinomial(shots, p / p.sum())
    return ShotRecord(circuit_id, P.kind, P.n, counts, shots)


def empirical_born(rec: ShotRecord) -> BornDistribution:
    return BornDistribution.from_vector(rec.kind, rec.n, rec.counts / rec.shots)


def shot_rng(master_seed: int, circuit_id: int) -> np.random.Generator:
    return np.random.default_rng([master_seed, SHOT_STREAM, circuit_id])


def sample_all(
    born: list[BornDistribution], shots: int, master_seed: int, workers: int = 1
) -> list[ShotRecord]:
    """Sample every circuit with its own derived stream; output is independent of ``workers``."""

    def one(j):
        return sample_shots(born[j], shots, shot_rng(master_seed, j), circuit_id=j)

    if workers <= 1:
        return [one(j) for j in range(len(born))]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, range(len(born))))


def records_to_csv(records: list[ShotRecord]) -> str:
    lines = ["circuit_id,kind,bin_label,count"]
    for rec in records:
        for label, c in zip(rec.labels(), rec.counts):
            lines.append(f"{rec.circuit_id},{rec.kind},{label},{int(c)}")
    return "\n".join(lines) + "\n"


def records_from_csv(text: str, n: int) -> list[ShotRecord]:
    rows: dict[int, tuple[str, list[int]]] = {}
    for line in text.splitlines()[1:]:
        if not line.strip():
            continue
        cid, kind, _label, count = line.split(",")
        rows.setdefault(int(cid), (kind, []))[1].append(int(count))
    return [
        ShotRecord(cid, kind, n, np.array(counts), int(sum(counts)))
        for cid, (kind, counts) in sorted(rows.items())
    ]


def run_manifest(seed: int, shots: int | None, model_hash: str, n_circuits: int) -> str:
    return json.dumps(
        {"seed": seed, "shots": shots, "model_hash": model_hash, "circuits": n_circuits},
        indent=1,
        sort_keys=True,
    )
