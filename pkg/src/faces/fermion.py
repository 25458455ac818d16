"""Majorana monomials, Jordan-Wigner strings, the gate set and O(2n) transforms.

Labels follow the physics convention: Majorana modes are ``1..2n`` and qubits
are ``1..n`` (qubit 1 is the leftmost tensor factor). Under Jordan-Wigner,
``gamma_{2j-1} = Z...Z X_j`` and ``gamma_{2j} = Z...Z Y_j``.

A single-particle transform ``R`` acts as ``U gamma_mu U^dag = sum_nu R[mu, nu] gamma_nu``
(0-based array indices). Composition is left-to-right in time: if ``R1``
is applied first, the circuit's matrix is ``R1 @ R2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

ORTHO_ATOL = 1e-10
REORTHO_THRESHOLD = 1e-12

TWO_PI = 2.0 * math.pi


# --- Pauli strings and Majorana monomials -------------------------------------


@dataclass(frozen=True)
class PauliString:
    """``i**phase * sigma_(x, z)`` with ``sigma_(x, z) = i^(x.z) X^x Z^z`` (Hermitian).

    ``x`` and ``z`` are per-qubit bit tuples, so ``x=(1,), z=(1,)`` is ``Y``.
    ``phase`` is a quarter-turn counter mod 4.
    """

    x: tuple[int, ...]
    z: tuple[int, ...]
    phase: int = 0

    def __post_init__(self):
        if len(self.x) != len(self.z):
            raise ValueError("x and z bit strings must have equal length")
        object.__setattr__(self, "x", tuple(int(b) & 1 for b in self.x))
        object.__setattr__(self, "z", tuple(int(b) & 1 for b in self.z))
        object.__setattr__(self, "phase", int(self.phase) % 4)

    @property
    def n(self) -> int:
        return len(self.x)

    @classmethod
    def from_label(cls, label: str, phase: int = 0) -> PauliString:
        xs = tuple(int(c in "XY") for c in label)
        zs = tuple(int(c in "ZY") for c in label)
        if any(c not in "IXYZ" for c in label):
            raise ValueError(f"bad Pauli label {label!r}")
        return cls(xs, zs, phase)

    @property
    def label(self) -> str:
        return "".join("IXZY"[a + 2 * b] for a, b in zip(self.x, self.z))

    @property
    def coefficient(self) -> complex:
        return 1j**self.phase

    def weight(self) -> int:
        return sum(a | b for a, b in zip(self.x, self.z))


def _mul_xz(k1, a1, b1, k2, a2, b2):
    # (i^k1 X^a1 Z^b1)(i^k2 X^a2 Z^b2) = i^(k1+k2) (-1)^(b1.a2) X^(a1+a2) Z^(b1+b2)
    sign = sum(b & a for b, a in zip(b1, a2)) % 2
    a = tuple(p ^ q for p, q in zip(a1, a2))
    b = tuple(p ^ q for p, q in zip(b1, b2))
    return (k1 + k2 + 2 * sign) % 4, a, b


def _majorana_xz(mu: int, n: int):
    """``gamma_mu`` as ``i^k X^a Z^b`` (product form, not the Hermitian label)."""
    j = (mu + 1) // 2  # qubit, 1-based
    a = tuple(int(q == j) for q in range(1, n + 1))
    if mu % 2:
        b = tuple(int(q < j) for q in range(1, n + 1))
        return 0, a, b
    b = tuple(int(q <= j) for q in range(1, n + 1))
    return 1, a, b  # Y = i X Z


def _check_monomial(alpha: Sequence[int], n: int) -> tuple[int, ...]:
    alpha = tuple(int(m) for m in alpha)
    if any(b <= a for a, b in zip(alpha, alpha[1:])):
        raise ValueError(f"monomial indices must be strictly ascending: {alpha}")
    if alpha and (alpha[0] < 1 or alpha[-1] > 2 * n):
        raise ValueError(f"monomial {alpha} out of range for {2 * n} modes")
    return alpha


def jw_pauli_of_monomial(alpha: Sequence[int], n: int) -> PauliString:
    """Pauli string with ``gamma_alpha == ps.coefficient * sigma_(ps.x, ps.z)``."""
    alpha = _check_monomial(alpha, n)
    k, a, b = 0, (0,) * n, (0,) * n
    for mu in alpha:
        k, a, b = _mul_xz(k, a, b, *_majorana_xz(mu, n))
    # X^a Z^b = i^(-a.b) sigma_(a, b)
    overlap = sum(p & q for p, q in zip(a, b))
    return PauliString(a, b, k - overlap)


def monomial_of_pauli(sigma: PauliString) -> tuple[tuple[int, ...], int]:
    """Return ``(alpha, phase)`` with ``sigma == i**phase * gamma_alpha`` exactly."""
    n = sigma.n
    support: set[int] = set()
    for j in range(1, n + 1):
        if sigma.x[j - 1]:
            support ^= set(range(1, 2 * j))
        if sigma.z[j - 1]:
            support ^= {2 * j - 1, 2 * j}
    alpha = tuple(sorted(support))
    forward = jw_pauli_of_monomial(alpha, n)
    # gamma_alpha = i^f sigma_canon, sigma = i^p sigma_canon  =>  sigma = i^(p-f) gamma_alpha
    return alpha, (sigma.phase - forward.phase) % 4


def majorana_degree(label: str) -> int:
    """Majorana degree of the Pauli string with the given label."""
    alpha, _ = monomial_of_pauli(PauliString.from_label(label))
    return len(alpha)


def all_monomials(modes: int, degree: int | None = None) -> Iterable[tuple[int, ...]]:
    degrees = range(modes + 1) if degree is None else [degree]
    for k in degrees:
        yield from combinations(range(1, modes + 1), k)


# --- gate set -----------------------------------------------------------------


@dataclass(frozen=True, order=True)
class ZRot:
    """``exp(i theta Z_qubit)`` with ``theta`` in bin ``[2pi(bin-1)/N, 2pi bin/N)``."""

    qubit: int
    bin: int

    def __str__(self):
        return f"Z{self.qubit}:{self.bin}"


@dataclass(frozen=True, order=True)
class FHop:
    """The matchgate ``G(H, H)`` on qubits ``(qubit, qubit+1)``."""

    qubit: int

    def __str__(self):
        return f"G{self.qubit}"


GateId = ZRot | FHop


def parse_gate_id(text: str) -> GateId:
    if text.startswith("Z"):
        q, b = text[1:].split(":")
        return ZRot(int(q), int(b))
    if text.startswith("G"):
        return FHop(int(text[1:]))
    raise ValueError(f"bad gate id {text!r}")


def gate_sort_key(g: GateId):
    return (0, g.qubit, g.bin) if isinstance(g, ZRot) else (1, g.qubit, 0)


def theta_bin(theta: float, n_bins: int) -> int:
    """1-based bin index of ``theta`` (reduced mod 2pi)."""
    theta = theta % TWO_PI
    k = int(math.floor(theta * n_bins / TWO_PI)) + 1
    return min(max(k, 1), n_bins)


@dataclass(frozen=True)
class GateInstance:
    gate: GateId
    theta: float | None = None

    def __post_init__(self):
        if isinstance(self.gate, ZRot):
            if self.theta is None or not (0.0 <= self.theta < TWO_PI):
                raise ValueError(f"ZRot needs theta in [0, 2pi), got {self.theta!r}")
        elif self.theta is not None:
            raise ValueError("FHop takes no angle")

    def __str__(self):
        if self.theta is None:
            return str(self.gate)
        return f"{self.gate}({self.theta!r})"


def zrot(qubit: int, theta: float, n_bins: int) -> GateInstance:
    theta = theta % TWO_PI
    if theta >= TWO_PI:  # -tiny % 2pi rounds to 2pi
        theta = 0.0
    return GateInstance(ZRot(qubit, theta_bin(theta, n_bins)), theta)


def fhop(qubit: int) -> GateInstance:
    return GateInstance(FHop(qubit))


def gate_registry(n: int, n_bins: int) -> list[GateId]:
    """All noise parameters for ``n`` qubits: binned Z rotations, then hops."""
    gates: list[GateId] = [ZRot(j, k) for j in range(1, n + 1) for k in range(1, n_bins + 1)]
    gates += [FHop(j) for j in range(1, n)]
    return gates


def check_gate(g: GateInstance, n: int, n_bins: int | None = None) -> None:
    if isinstance(g.gate, ZRot):
        if not 1 <= g.gate.qubit <= n:
            raise ValueError(f"{g.gate} acts outside {n} qubits")
        if n_bins is not None and theta_bin(g.theta, n_bins) != g.gate.bin:
            raise ValueError(f"theta={g.theta} is not in bin {g.gate.bin} of {n_bins}")
    elif not 1 <= g.gate.qubit <= n - 1:
        raise ValueError(f"{g.gate} acts outside {n} qubits")


# --- single-particle transforms -----------------------------------------------


def plane_rotation(modes: int, mu: int, angle: float) -> np.ndarray:
    """Rotation on Majorana modes ``(mu, mu+1)``: rows ``(cos, -sin), (sin, cos)``."""
    R = np.eye(modes)
    c, s = math.cos(angle), math.sin(angle)
    i = mu - 1
    R[i, i], R[i, i + 1] = c, -s
    R[i + 1, i], R[i + 1, i + 1] = s, c
    return R


def canonical_reflection(modes: int) -> np.ndarray:
    """Transition matrix of conjugation by ``gamma_1``: ``diag(1, -1, ..., -1)``."""
    R = -np.eye(modes)
    R[0, 0] = 1.0
    return R


# G(H, H) on qubits (j, j+1) swaps gamma_{2j-1} <-> gamma_{2j+1} and negates gamma_{2j}.
_FHOP_BLOCK = np.array(
    [
        [0.0, 0.0, 1.0, 0.0],
        [0.0, -1.0, 0.0, 0.0],
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ]
)


def gate_transition_matrix(g: GateInstance, modes: int) -> np.ndarray:
    n = modes // 2
    check_gate(g, n)
    if isinstance(g.gate, ZRot):
        return plane_rotation(modes, 2 * g.gate.qubit - 1, 2.0 * g.theta)
    R = np.eye(modes)
    i = 2 * g.gate.qubit - 2
    R[i : i + 4, i : i + 4] = _FHOP_BLOCK
    return R


def orthogonality_error(R: np.ndarray) -> float:
    return float(np.abs(R.T @ R - np.eye(len(R))).max())


def check_orthogonal(R: np.ndarray, atol: float = ORTHO_ATOL) -> np.ndarray:
    R = np.asarray(R, dtype=float)
    if R.ndim != 2 or R.shape[0] != R.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {R.shape}")
    err = orthogonality_error(R)
    if err > atol:
        raise ValueError(f"matrix is not orthogonal (max |R^T R - I| = {err:.2e})")
    return R


def reorthonormalize(R: np.ndarray) -> np.ndarray:
    """Nearest orthogonal matrix (polar factor)."""
    u, _, vt = np.linalg.svd(R)
    return u @ vt


def compose_transforms(R1: np.ndarray, R2: np.ndarray) -> np.ndarray:
    """Transform of ``R1`` followed by ``R2``."""
    R1, R2 = np.asarray(R1), np.asarray(R2)
    if R1.shape != R2.shape:
        raise ValueError(f"mode count mismatch: {R1.shape} vs {R2.shape}")
    R = R1 @ R2
    if orthogonality_error(R) > REORTHO_THRESHOLD:
        R = reorthonormalize(R)
    return R


def circuit_transition_matrix(gates: Sequence[GateInstance], modes: int) -> np.ndarray:
    R = np.eye(modes)
    for g in gates:
        R = compose_transforms(R, gate_transition_matrix(g, modes))
    return R


def compound_action(R: np.ndarray, alpha: Sequence[int]) -> dict[tuple[int, ...], float]:
    """Coefficients ``det(R[alpha, beta])`` of ``U gamma_alpha U^dag`` over ``|beta| == |alpha|``."""
    modes = len(R)
    alpha = _check_monomial(alpha, modes // 2)
    rows = [a - 1 for a in alpha]
    betas = list(combinations(range(1, modes + 1), len(alpha)))
    if not alpha:
        return {(): 1.0}
    subs = np.stack([R[np.ix_(rows, [b - 1 for b in beta])] for beta in betas])
    dets = np.linalg.det(subs)
    return dict(zip(betas, dets.tolist()))


def compound_matrix(R: np.ndarray, k: int) -> np.ndarray:
    """The ``k``-th compound of ``R`` with rows/columns in lexicographic subset order."""
    modes = len(R)
    subsets = list(combinations(range(modes), k))
    C = np.empty((len(subsets), len(subsets)))
    for i, a in enumerate(subsets):
        C[i] = np.linalg.det(np.stack([R[np.ix_(a, b)] for b in subsets])) if k else 1.0
    return C


def u_plus_gates(n: int, n_bins: int) -> list[GateInstance]:
    """Gates (in application order) realising U+, which maps ``|+>^n`` to ``|+_y>|0...0>``.

    U+ = e^{-i pi/4 Z1} prod_{j=1}^{n-1} [e^{-i pi/4 Z_{j+1}} G_j e^{i pi/4 Z_j} G_j e^{i pi/4 Z_{j+1}}]
    as an operator product, so the last factor is applied first.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    q = math.pi / 4
    seq: list[GateInstance] = []
    for j in range(n - 1, 0, -1):
        seq += [
            zrot(j + 1, q, n_bins),
            fhop(j),
            zrot(j, q, n_bins),
            fhop(j),
            zrot(j + 1, -q, n_bins),
        ]
    seq.append(zrot(1, -q, n_bins))
    return seq


def inverse_gate(g: GateInstance, n_bins: int) -> GateInstance:
    if isinstance(g.gate, FHop):
        return g
    return zrot(g.gate.qubit, -g.theta, n_bins)


# --- Haar sampling and Givens compilation ---------------------------------------


def haar_orthogonal(modes: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random element of O(modes).

    QR of a Gaussian matrix with the sign of ``diag(r)`` fixed positive, then
    the canonical reflection composed with probability 1/2.
    """
    g = rng.standard_normal((modes, modes))
    q, r = np.linalg.qr(g)
    q = q * np.sign(np.diag(r))
    if rng.random() < 0.5:
        q = canonical_reflection(modes) @ q
    return q


@dataclass(frozen=True)
class GivensDecomposition:
    """``R = [reflection] @ rot_1 @ rot_2 @ ...`` with each rotation ``(mu, angle)``
    acting on Majorana modes ``(mu, mu+1)``, listed in application order."""

    modes: int
    reflect: bool
    rotations: tuple[tuple[int, float], ...]

    def matrix(self) -> np.ndarray:
        R = canonical_reflection(self.modes) if self.reflect else np.eye(self.modes)
        for mu, angle in self.rotations:
            R = R @ plane_rotation(self.modes, mu, angle)
        return R


def givens_decompose(R: np.ndarray, atol: float = 1e-14) -> GivensDecomposition:
    R = check_orthogonal(R, atol=1e-8)
    modes = len(R)
    reflect = np.linalg.det(R) < 0
    W = canonical_reflection(modes) @ R if reflect else R.copy()
    # Right-multiply by adjacent rotations until W is the identity:
    # W G_1 ... G_m = I  =>  W = G_m^T ... G_1^T.
    applied: list[tuple[int, float]] = []
    for row in range(modes - 1):
        for col in range(modes - 1, row, -1):
            a, b = W[row, col - 1], W[row, col]
            if abs(b) <= atol:
                continue
            phi = math.atan2(b, a)
            # rotating by phi leaves (r, 0) in columns (col-1, col), r >= 0
            W = W @ plane_rotation(modes, col, phi)
            applied.append((col, phi))
    rotations = tuple((mu, -angle) for mu, angle in reversed(applied))
    return GivensDecomposition(modes, bool(reflect), rotations)
