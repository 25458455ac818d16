"""Circuit ensembles, the design matrix, and per-degree identifiability checks."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import fermion
from .fermion import FHop, GateId, GateInstance, fhop, zrot
from .noise import GateNoiseModel, UnknownGateError

KINDS = ("z", "x")


class IdentifiabilityError(ValueError):
    """The design matrix (or one of its degree sectors) lacks full column rank."""

    def __init__(self, message: str, degrees: Sequence[int] = ()):
        super().__init__(message)
        self.degrees = tuple(degrees)


@dataclass(frozen=True)
class Circuit:
    kind: str
    gates: tuple[GateInstance, ...]
    index: int = 0
    seed: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown circuit kind {self.kind!r}")
        object.__setattr__(self, "gates", tuple(self.gates))

    def __len__(self):
        return len(self.gates)

    def transition_matrix(self, n: int) -> np.ndarray:
        return fermion.circuit_transition_matrix(self.gates, 2 * n)

    def to_dict(self) -> dict:
        return {
            "id": self.index,
            "kind": self.kind,
            "gates": [[str(g.gate), g.theta] for g in self.gates],
            "seed": list(self.seed) if self.seed is not None else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> Circuit:
        gates = tuple(
            GateInstance(fermion.parse_gate_id(gid), theta) for gid, theta in d["gates"]
        )
        seed = tuple(d["seed"]) if d.get("seed") is not None else None
        return cls(d["kind"], gates, d["id"], seed)


def circuits_to_jsonl(circuits: Sequence[Circuit]) -> str:
    return "".join(json.dumps(c.to_dict()) + "\n" for c in circuits)


def circuits_from_jsonl(text: str) -> list[Circuit]:
    return [Circuit.from_dict(json.loads(line)) for line in text.splitlines() if line.strip()]


# --- circuit construction -------------------------------------------------------


def random_gate(rng: np.random.Generator, n: int, n_bins: int) -> GateInstance:
    """Uniform over the ``2n - 1`` gate slots; Z-rotation angles uniform in ``[0, 2pi)``."""
    slot = int(rng.integers(2 * n - 1))
    if slot < n:
        return zrot(slot + 1, rng.uniform(0.0, fermion.TWO_PI), n_bins)
    return fhop(slot - n + 1)


def inverse_word(
    word: Sequence[GateInstance], n_bins: int, rng: np.random.Generator | None = None
) -> list[GateInstance]:
    """Gates undoing ``word``.

    Without ``rng`` each Z rotation by ``theta`` is undone by one rotation by
    ``2pi - theta``. With ``rng`` it is undone by two rotations by ``phi`` and
    ``2pi - theta - phi`` with ``phi`` uniform, so that a bin and its mirror
    bin do not always occur together.
    """
    out: list[GateInstance] = []
    for g in reversed(word):
        if isinstance(g.gate, FHop):
            out.append(g)
        elif rng is None:
            out.append(fermion.inverse_gate(g, n_bins))
        else:
            phi = rng.uniform(0.0, fermion.TWO_PI)
            out.append(zrot(g.gate.qubit, phi, n_bins))
            out.append(zrot(g.gate.qubit, -g.theta - phi, n_bins))
    return out


def mirror_circuit(
    word: Sequence[GateInstance],
    kind: str,
    n: int,
    n_bins: int,
    rng: np.random.Generator | None = None,
    index: int = 0,
    seed=None,
) -> Circuit:
    """``word`` then its inverse, followed by the U+ gates for an x-kind circuit."""
    gates = list(word) + inverse_word(word, n_bins, rng)
    if kind == "x":
        gates += fermion.u_plus_gates(n, n_bins)
    return Circuit(kind, tuple(gates), index, seed)


def build_z_circuit(
    rng: np.random.Generator, half_depth: int, n: int, n_bins: int, index: int = 0, seed=None
) -> Circuit:
    if half_depth < 1:
        raise ValueError("z circuits need half_depth >= 1")
    word = [random_gate(rng, n, n_bins) for _ in range(half_depth)]
    return mirror_circuit(word, "z", n, n_bins, rng, index, seed)


def build_x_circuit(
    rng: np.random.Generator, half_depth: int, n: int, n_bins: int, index: int = 0, seed=None
) -> Circuit:
    if half_depth < 0:
        raise ValueError("half_depth must be >= 0")
    word = [random_gate(rng, n, n_bins) for _ in range(half_depth)]
    return mirror_circuit(word, "x", n, n_bins, rng, index, seed)


def check_net_target(circuit: Circuit, n: int, n_bins: int, atol: float = 1e-8) -> None:
    R = circuit.transition_matrix(n)
    if circuit.kind == "z":
        target = np.eye(2 * n)
    else:
        target = fermion.circuit_transition_matrix(fermion.u_plus_gates(n, n_bins), 2 * n)
    err = float(np.abs(R - target).max())
    if err > atol:
        raise ValueError(f"circuit {circuit.index} misses its net target by {err:.2e}")


# --- design matrix --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    """Occurrence counts ``A[j, g]`` of gate parameter ``g`` in circuit ``j``."""

    A: np.ndarray
    gates: tuple[GateId, ...]
    kinds: tuple[str, ...]
    column: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "column", {g: i for i, g in enumerate(self.gates)})
        self.A.setflags(write=False)

    @property
    def shape(self):
        return self.A.shape

    def to_csv(self) -> str:
        header = "circuit_id,kind," + ",".join(str(g) for g in self.gates)
        rows = [
            f"{j},{kind}," + ",".join(str(int(v)) for v in row)
            for j, (kind, row) in enumerate(zip(self.kinds, self.A))
        ]
        return "\n".join([header, *rows]) + "\n"


def count_gates(circuit: Circuit, column: dict, K: int) -> np.ndarray:
    row = np.zeros(K, dtype=np.int64)
    for g in circuit.gates:
        try:
            row[column[g.gate]] += 1
        except KeyError:
            raise ValueError(f"gate {g.gate} in circuit {circuit.index} is not registered") from None
    return row


def design_matrix(
    circuits: Sequence[Circuit], registry: Sequence[GateId], check_rank: bool = True
) -> DesignMatrix:
    """Count gate occurrences. Raises ``IdentifiabilityError`` if ``rank(A) < K``."""
    gates = tuple(registry)
    K, J = len(gates), len(circuits)
    column = {g: i for i, g in enumerate(gates)}
    A = np.zeros((J, K), dtype=np.int64)
    for j, c in enumerate(circuits):
        A[j] = count_gates(c, column, K)
    design = DesignMatrix(A, gates, tuple(c.kind for c in circuits))
    if check_rank:
        if J < K or np.linalg.matrix_rank(A.astype(float)) < K:
            raise IdentifiabilityError("A is not full rank. M is not identifiable from C.")
    return design


def row_mask(kinds: Sequence[str], degree: int, n: int) -> np.ndarray:
    """Rows whose circuits reveal the degree-``degree`` circuit eigenvalue."""
    if not 1 <= degree <= 2 * n:
        raise ValueError(f"degree must lie in 1..{2 * n} (degree 0 is fixed to 1), got {degree}")
    kinds = np.asarray(kinds)
    if degree % 2:
        return kinds == "x"
    if degree == 2 * n:
        return kinds == "z"
    return np.ones(len(kinds), dtype=bool)


def per_degree_rows(design: DesignMatrix, degree: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """``(A_k, rows)``: the row-filtered design for one degree and the kept row indices."""
    rows = np.flatnonzero(row_mask(design.kinds, degree, n))
    return design.A[rows], rows


def full_column_rank(A: np.ndarray) -> bool:
    return A.shape[0] >= A.shape[1] and np.linalg.matrix_rank(np.asarray(A, float)) == A.shape[1]


def deficient_degrees(design: DesignMatrix, n: int) -> list[int]:
    return [k for k in range(1, 2 * n + 1) if not full_column_rank(per_degree_rows(design, k, n)[0])]


def check_identifiable(design: DesignMatrix, n: int) -> None:
    bad = deficient_degrees(design, n)
    if bad:
        raise IdentifiabilityError(
            f"A_k is not full rank for degrees {bad}; the model is not identifiable", bad
        )


def pinv_inf_norm(A: np.ndarray) -> float:
    """``max_i sum_j |A^+_ij|`` for a full-column-rank ``A``."""
    A = np.asarray(A, dtype=float)
    if not full_column_rank(A):
        raise IdentifiabilityError("A is rank deficient; it has unlearnable (gauge) parameters")
    return float(np.abs(np.linalg.pinv(A)).sum(axis=1).max())


# --- ensembles ------------------------------------------------------------------


def generate_circuits(
    n: int,
    n_bins: int,
    count_z: int,
    count_x: int,
    depth_range: tuple[int, int],
    x_depth_range: tuple[int, int],
    rng: np.random.Generator,
    seed=None,
) -> list[Circuit]:
    circuits = []
    for j in range(count_z + count_x):
        kind = "z" if j < count_z else "x"
        lo, hi = depth_range if kind == "z" else x_depth_range
        h = int(rng.integers(lo, hi + 1))
        build = build_z_circuit if kind == "z" else build_x_circuit
        circuits.append(build(rng, h, n, n_bins, index=j, seed=seed))
    return circuits


def draw_ensemble(
    n: int,
    n_bins: int,
    count_z: int,
    count_x: int,
    depth_range: tuple[int, int],
    x_depth_range: tuple[int, int] | None,
    rng: np.random.Generator,
    max_retries: int = 5,
    seed=None,
) -> tuple[list[Circuit], DesignMatrix, list[int]]:
    """Like ``generate_ensemble`` but returns the last attempt and its deficient degrees."""
    if max_retries < 1:
        raise ValueError("max_retries must be >= 1")
    registry = fermion.gate_registry(n, n_bins)
    x_depth_range = depth_range if x_depth_range is None else x_depth_range
    for _ in range(max_retries):
        circuits = generate_circuits(
            n, n_bins, count_z, count_x, depth_range, x_depth_range, rng, seed
        )
        design = design_matrix(circuits, registry, check_rank=False)
        bad = deficient_degrees(design, n)
        if not bad:
            break
    return circuits, design, bad


def generate_ensemble(
    n: int,
    n_bins: int,
    count_z: int,
    count_x: int,
    depth_range: tuple[int, int],
    x_depth_range: tuple[int, int] | None,
    rng: np.random.Generator,
    max_retries: int = 5,
    seed=None,
) -> tuple[list[Circuit], DesignMatrix]:
    """Random z/x ensemble whose every degree sector has full column rank.

    Redraws the whole ensemble from the same stream up to ``max_retries`` times.
    """
    circuits, design, bad = draw_ensemble(
        n, n_bins, count_z, count_x, depth_range, x_depth_range, rng, max_retries, seed
    )
    if bad:
        raise IdentifiabilityError(
            f"no identifiable ensemble after {max_retries} attempts; "
            f"A_k is not full rank for degrees {bad}",
            bad,
        )
    return circuits, design


def circuit_eigenvalue_table(design: DesignMatrix, xi_by_gate) -> np.ndarray:
    """``Lambda[j, k] = prod_g xi[g, k] ** A[j, g]`` for every circuit ``j``."""
    XI = np.stack([np.asarray(xi_by_gate[g], dtype=float) for g in design.gates])
    lam = np.ones((design.A.shape[0], XI.shape[1]))
    for j, row in enumerate(design.A):
        nz = np.flatnonzero(row)
        lam[j] = np.prod(XI[nz] ** row[nz, None], axis=0)
    return lam


def u_plus_length(n: int) -> int:
    return 5 * (n - 1) + 1


@dataclass(frozen=True)
class FacesModel:
    """Gate registry, per-gate noise, circuits and their design matrix."""

    n: int
    n_bins: int
    noise: GateNoiseModel
    circuits: tuple[Circuit, ...]
    design: DesignMatrix

    def __post_init__(self):
        object.__setattr__(self, "circuits", tuple(self.circuits))
        if len(self.circuits) != self.design.A.shape[0]:
            raise ValueError("design matrix rows do not match the circuit list")
        missing = [str(g) for g in self.design.gates if g not in self.noise.xi]
        if missing:
            raise UnknownGateError(f"no noise for gates {missing[:5]}")

    @classmethod
    def build(cls, n, n_bins, noise, circuits, check_rank=False) -> FacesModel:
        design = design_matrix(circuits, fermion.gate_registry(n, n_bins), check_rank=check_rank)
        return cls(n, n_bins, noise, circuits, design)

    def eigenvalue_table(self) -> np.ndarray:
        return circuit_eigenvalue_table(self.design, self.noise.xi)
