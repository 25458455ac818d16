"""Dense reference simulator: explicit Majoranas, unitaries and Pauli transfer matrices.

Used only to cross-check the analytic pipeline at small sizes. Superoperators
are real Pauli transfer matrices (PTMs) in the basis of Pauli strings over
``IXYZ`` with qubit 1 as the leftmost tensor factor.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache, reduce
from typing import Sequence

import numpy as np

from . import fermion
from .fermion import FHop, GateInstance, jw_pauli_of_monomial
from .kravchuk import BornDistribution, eigs_to_probs
from .noise import GateNoiseModel, PauliChannel

MAX_DENSE_QUBITS = 4
MAX_SUPEROP_QUBITS = 3
TWIRL_RESIDUAL_TOL = 0.25

_PAULI_1Q = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.diag([1.0, -1.0]).astype(complex),
}
_HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)


class NotTwirledError(ValueError):
    pass


def _check_dense(n: int, limit: int = MAX_DENSE_QUBITS) -> None:
    if not 1 <= n <= limit:
        raise ValueError(f"dense simulation supports 1 <= n <= {limit}, got {n}")


def kron(*mats) -> np.ndarray:
    return reduce(np.kron, mats)


def dense_pauli(label: str) -> np.ndarray:
    return kron(*(_PAULI_1Q[c] for c in label))


@lru_cache(maxsize=None)
def pauli_labels(n: int) -> tuple[str, ...]:
    return tuple("".join(p) for p in itertools.product("IXYZ", repeat=n))


@lru_cache(maxsize=None)
def _pauli_stack(n: int) -> np.ndarray:
    stack = np.stack([dense_pauli(lbl) for lbl in pauli_labels(n)])
    stack.setflags(write=False)
    return stack


def dense_monomial(alpha: Sequence[int], n: int) -> np.ndarray:
    _check_dense(n)
    ps = jw_pauli_of_monomial(alpha, n)
    return ps.coefficient * dense_pauli(ps.label)


def dense_majoranas(n: int) -> list[np.ndarray]:
    return [dense_monomial((mu,), n) for mu in range(1, 2 * n + 1)]


# --- unitaries ------------------------------------------------------------------


def _embed(n: int, first: int, block: np.ndarray) -> np.ndarray:
    k = int(round(math.log2(len(block))))
    return kron(np.eye(2 ** (first - 1)), block, np.eye(2 ** (n - first - k + 1)))


def dense_gate(g: GateInstance, n: int) -> np.ndarray:
    """``e^{i theta Z_j}`` or the matchgate G(H, H) on qubits ``(j, j+1)``."""
    _check_dense(n)
    fermion.check_gate(g, n)
    if isinstance(g.gate, FHop):
        G = np.zeros((4, 4), dtype=complex)
        G[np.ix_([0, 3], [0, 3])] = _HADAMARD
        G[np.ix_([1, 2], [1, 2])] = _HADAMARD
        return _embed(n, g.gate.qubit, G)
    phase = np.exp(1j * g.theta)
    return _embed(n, g.gate.qubit, np.diag([phase, phase.conjugate()]))


def dense_circuit(gates: Sequence[GateInstance], n: int) -> np.ndarray:
    U = np.eye(2**n, dtype=complex)
    for g in gates:
        U = dense_gate(g, n) @ U
    return U


def transition_matrix_of(U: np.ndarray, n: int) -> np.ndarray:
    """``R[mu, nu]`` with ``U gamma_mu U^dag = sum_nu R[mu, nu] gamma_nu``."""
    gam = dense_majoranas(n)
    R = np.empty((2 * n, 2 * n))
    for mu, g in enumerate(gam):
        A = U @ g @ U.conj().T
        for nu, h in enumerate(gam):
            R[mu, nu] = np.trace(h.conj().T @ A).real / 2**n
    return R


@lru_cache(maxsize=None)
def _pair_product(n: int, mu: int) -> np.ndarray:
    out = dense_monomial((mu,), n) @ dense_monomial((mu + 1,), n)
    out.setflags(write=False)
    return out


def pair_rotation(n: int, mu: int, angle: float) -> np.ndarray:
    """``exp((angle/2) gamma_mu gamma_{mu+1})``, whose transition matrix is ``plane_rotation``."""
    # (gamma_mu gamma_{mu+1})^2 = -1, so the exponential is a cos/sin combination
    return math.cos(angle / 2) * np.eye(2**n) + math.sin(angle / 2) * _pair_product(n, mu)


def flo_unitary(R: np.ndarray, n: int) -> np.ndarray:
    """A dense unitary realising the transition matrix ``R`` (up to global phase)."""
    _check_dense(n)
    dec = fermion.givens_decompose(R)
    U = dense_monomial((1,), n) if dec.reflect else np.eye(2**n, dtype=complex)
    for mu, angle in dec.rotations:
        U = pair_rotation(n, mu, angle) @ U
    return U


# --- states and channels --------------------------------------------------------


def basis_state(bits: Sequence[int]) -> np.ndarray:
    psi = kron(*(np.eye(2)[b] for b in bits)).astype(complex)
    return np.outer(psi, psi.conj())


def plus_state(n: int) -> np.ndarray:
    psi = np.full(2**n, 2 ** (-n / 2), dtype=complex)
    return np.outer(psi, psi.conj())


def apply_pauli_channel(rho: np.ndarray, channel: PauliChannel) -> np.ndarray:
    out = np.zeros_like(rho, dtype=complex)
    for label, p in channel.probs.items():
        P = dense_pauli(label)
        out += p * (P @ rho @ P)
    return out


def ptm_of_unitary(U: np.ndarray) -> np.ndarray:
    """``T[i, j] = tr(P_i U P_j U^dag) / 2^n``."""
    n = int(round(math.log2(len(U))))
    P = _pauli_stack(n)
    conj = U @ P @ U.conj().T
    d = 4**n
    return (P.reshape(d, d) @ conj.transpose(0, 2, 1).reshape(d, d).T).real / 2**n


def ptm_of_pauli_channel(channel: PauliChannel) -> np.ndarray:
    """Diagonal PTM ``f_P = sum_Q p_Q (-1)^{[P, Q] != 0}``."""
    n = channel.n
    labels = pauli_labels(n)
    f = np.zeros(len(labels))
    for label, p in channel.probs.items():
        f += p * np.array([_commutes(a, label) for a in labels])
    return np.diag(f)


def _commutes(a: str, b: str) -> int:
    anti = sum(x != "I" and y != "I" and x != y for x, y in zip(a, b))
    return -1 if anti % 2 else 1


def state_to_pauli_vector(rho: np.ndarray) -> np.ndarray:
    n = int(round(math.log2(len(rho))))
    return np.einsum("iab,ba->i", _pauli_stack(n), rho).real


def pauli_vector_to_state(r: np.ndarray) -> np.ndarray:
    n = int(round(math.log(len(r), 4)))
    return np.einsum("i,iab->ab", r, _pauli_stack(n)) / 2**n


# --- twirling -------------------------------------------------------------------


def haar_flo_ptm(n: int, rng: np.random.Generator) -> np.ndarray:
    return ptm_of_unitary(flo_unitary(fermion.haar_orthogonal(2 * n, rng), n))


def mc_flo_twirl(ptm: np.ndarray, T: int, rng: np.random.Generator) -> np.ndarray:
    """Average of ``V^dag o E o V`` over ``T`` Haar FLO unitaries ``V``."""
    if T < 1:
        raise ValueError("T must be >= 1")
    n = int(round(math.log(len(ptm), 4)))
    _check_dense(n, MAX_SUPEROP_QUBITS)
    acc = np.zeros_like(ptm)
    for _ in range(T):
        V = haar_flo_ptm(n, rng)
        acc += V.T @ ptm @ V  # PTMs of unitaries are orthogonal, so V^T is V^dag
    return acc / T


@lru_cache(maxsize=None)
def pauli_degrees(n: int) -> np.ndarray:
    deg = np.array([fermion.majorana_degree(lbl) for lbl in pauli_labels(n)])
    deg.setflags(write=False)
    return deg


def twirled_ptm(xi) -> np.ndarray:
    """Exactly FLO-twirled channel with degree eigenvalues ``xi``."""
    xi = np.asarray(xi, dtype=float)
    n = (len(xi) - 1) // 2
    return np.diag(xi[pauli_degrees(n)])


@dataclass(frozen=True)
class TwirlExtraction:
    q: np.ndarray
    xi: np.ndarray
    residual: float


def extract_fermionic_probs(ptm: np.ndarray, tol: float | None = TWIRL_RESIDUAL_TOL) -> TwirlExtraction:
    """Degree eigenvalues and error probabilities of an (approximately) twirled PTM.

    ``residual`` is the largest deviation of the PTM from the exactly twirled
    PTM built from the degree averages of its diagonal.
    """
    n = int(round(math.log(len(ptm), 4)))
    deg = pauli_degrees(n)
    diag = np.diag(ptm)
    xi = np.array([diag[deg == k].mean() for k in range(2 * n + 1)])
    residual = float(np.abs(ptm - twirled_ptm(xi)).max())
    if tol is not None and residual > tol:
        raise NotTwirledError(f"superoperator is not FLO-twirled (residual {residual:.3g})")
    return TwirlExtraction(eigs_to_probs(xi), xi, residual)


# --- Born distributions ---------------------------------------------------------


@lru_cache(maxsize=None)
def _weight_projectors(n: int, kind: str) -> np.ndarray:
    """Rows: measurement effects in the Pauli-vector basis, in BornDistribution order."""
    dim = 2**n
    weights = np.array([bin(b).count("1") for b in range(dim)])
    effects = []
    if kind == "z":
        for w in range(n + 1):
            effects.append(np.diag((weights == w).astype(complex)))
    else:
        plus_y = np.array([1, 1j]) / math.sqrt(2)
        for sign in (1, -1):
            v = plus_y if sign == 1 else plus_y.conj()
            Py = np.outer(v, v.conj())
            rest = np.array([bin(b).count("1") for b in range(2 ** (n - 1))])
            for w in range(n):
                effects.append(np.kron(Py, np.diag((rest == w).astype(complex))))
    P = _pauli_stack(n)
    return np.stack([np.einsum("iab,ba->i", P, E).real / dim for E in effects])


def born_from_pauli_vector(r: np.ndarray, kind: str, n: int) -> BornDistribution:
    return BornDistribution.from_vector(kind, n, _weight_projectors(n, kind) @ r)


@dataclass(frozen=True)
class OracleBorn:
    born: BornDistribution
    stderr: np.ndarray  # batch-means standard error per bin, in ``born.vector()`` order


def _run_pauli_vector(gates, n, kind, gate_ptms, noise_ptms):
    rho = basis_state([0] * n) if kind == "z" else plus_state(n)
    r = state_to_pauli_vector(rho)
    for g in gates:
        r = gate_ptms[g] @ (noise_ptms[g.gate] @ r)
    return r


def oracle_born(
    circuit,
    noise: GateNoiseModel,
    T: int,
    rng: np.random.Generator,
    batches: int = 40,
) -> OracleBorn:
    """Dense simulation with each gate's Pauli channel MC-twirled over ``T`` samples.

    One twirled superoperator per distinct gate parameter is reused at every
    position. The standard error comes from splitting the ``T`` samples into
    ``batches`` groups and rerunning the circuit with each group's average.
    """
    n = noise.n
    _check_dense(n, MAX_SUPEROP_QUBITS)
    if T < batches:
        raise ValueError("need at least one twirl sample per batch")
    kind = circuit.kind
    distinct = sorted({g.gate for g in circuit.gates}, key=fermion.gate_sort_key)
    # per gate and batch: sum of conjugated PTMs
    sizes = np.diff(np.linspace(0, T, batches + 1).round().astype(int))
    batch_ptms = {}
    for gid in distinct:
        ch = noise.channels.get(gid)
        E = ptm_of_pauli_channel(ch) if ch is not None else twirled_ptm(noise.eigs(gid))
        batch_ptms[gid] = np.stack([mc_flo_twirl(E, int(s), rng) for s in sizes])
    gate_ptms = {g: ptm_of_unitary(dense_gate(g, n)) for g in set(circuit.gates)}

    weights = sizes / T
    full = {gid: np.tensordot(weights, b, axes=1) for gid, b in batch_ptms.items()}
    P = born_from_pauli_vector(_run_pauli_vector(circuit.gates, n, kind, gate_ptms, full), kind, n)
    per_batch = np.stack(
        [
            born_from_pauli_vector(
                _run_pauli_vector(
                    circuit.gates, n, kind, gate_ptms, {gid: b[i] for gid, b in batch_ptms.items()}
                ),
                kind,
                n,
            ).vector()
            for i in range(batches)
        ]
    )
    stderr = per_batch.std(axis=0, ddof=1) / math.sqrt(batches)
    return OracleBorn(P, stderr)
