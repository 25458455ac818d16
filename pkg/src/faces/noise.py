"""Pauli channels, their FLO twirl, and per-gate noise models."""
from __future__ import annotations

import itertools
import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .fermion import FHop, GateId, majorana_degree, parse_gate_id, gate_sort_key
from .kravchuk import NORM_ATOL, probs_to_eigs

# Channels whose twirled eigenvalues drop below 1 - C_PRIME are outside the
# regime where the sample-complexity guarantee applies.
C_PRIME = 0.5


class UnknownGateError(KeyError):
    pass


class WeakEigenvalueWarning(UserWarning):
    pass


@dataclass(frozen=True)
class PauliChannel:
    """Pauli channel on ``n`` qubits as a sparse ``{label: probability}`` table.

    Labels are strings over ``IXYZ`` with qubit 1 first.
    """

    n: int
    probs: Mapping[str, float]

    def __post_init__(self):
        probs = {}
        for label, p in self.probs.items():
            if len(label) != self.n or any(c not in "IXYZ" for c in label):
                raise ValueError(f"bad Pauli label {label!r} for {self.n} qubits")
            if p < 0:
                raise ValueError(f"negative probability {p} for {label}")
            if p:
                probs[label] = float(p)
        total = math.fsum(probs.values())
        if abs(total - 1.0) > NORM_ATOL:
            raise ValueError(f"Pauli probabilities sum to {total!r}, not 1")
        object.__setattr__(self, "probs", probs)

    @classmethod
    def identity(cls, n: int) -> PauliChannel:
        return cls(n, {"I" * n: 1.0})

    def __getitem__(self, label: str) -> float:
        return self.probs.get(label, 0.0)


def flo_twirl_pauli(channel: PauliChannel) -> np.ndarray:
    """Fermionic error probabilities ``q_k``: the total Pauli probability at Majorana degree ``k``."""
    q = np.zeros(2 * channel.n + 1)
    for label, p in channel.probs.items():
        q[majorana_degree(label)] += p
    return q / q.sum()


def channel_eigs(q) -> np.ndarray:
    """Twirled channel eigenvalues of a fermionic error distribution."""
    return probs_to_eigs(q)


def compose_twirled(xi1, xi2) -> np.ndarray:
    xi1, xi2 = np.asarray(xi1, dtype=float), np.asarray(xi2, dtype=float)
    if xi1.shape != xi2.shape:
        raise ValueError(f"length mismatch: {xi1.shape} vs {xi2.shape}")
    return xi1 * xi2


def random_pauli_noise(
    qubits: tuple[int, ...],
    n: int,
    rng: np.random.Generator,
    center: float = 1e-2,
    halfwidth: float = 1e-3,
) -> PauliChannel:
    """Random Pauli channel supported on ``qubits`` (1-based) of an ``n``-qubit register.

    Each non-identity Pauli on the support gets an independent probability
    drawn uniformly from ``[center - halfwidth, center + halfwidth]``; the
    identity takes the remainder.
    """
    k = len(qubits)
    n_errors = 4**k - 1
    if halfwidth < 0 or center - halfwidth < 0:
        raise ValueError("interval must lie in [0, inf)")
    if n_errors * (center + halfwidth) >= 1:
        raise ValueError(
            f"{n_errors} probabilities up to {center + halfwidth} leave no room for the identity"
        )
    if len(set(qubits)) != k or not all(1 <= q <= n for q in qubits):
        raise ValueError(f"bad support {qubits} for {n} qubits")
    probs = {}
    draws = rng.uniform(center - halfwidth, center + halfwidth, size=n_errors)
    locals_ = ["".join(p) for p in itertools.product("IXYZ", repeat=k)][1:]
    for local, p in zip(locals_, draws):
        label = ["I"] * n
        for q, c in zip(qubits, local):
            label[q - 1] = c
        probs["".join(label)] = float(p)
    probs["I" * n] = 1.0 - math.fsum(draws)
    return PauliChannel(n, probs)


def random_two_qubit_pauli_noise(
    pair: tuple[int, int],
    n: int,
    rng: np.random.Generator,
    center: float = 1e-2,
    halfwidth: float = 1e-3,
) -> PauliChannel:
    if len(pair) != 2 or pair[1] != pair[0] + 1:
        raise ValueError(f"expected an adjacent qubit pair, got {pair}")
    return random_pauli_noise(tuple(pair), n, rng, center, halfwidth)


def noise_support(gate: GateId, n: int) -> tuple[int, ...]:
    """Qubits hit by the random channel attached to ``gate``.

    Hops use their own pair; a Z rotation on qubit ``j`` uses ``(j, j+1)``,
    or ``(n-1, n)`` on the last qubit. A single qubit register uses ``(1,)``.
    """
    if n == 1:
        return (1,)
    if isinstance(gate, FHop):
        return (gate.qubit, gate.qubit + 1)
    j = gate.qubit
    return (j, j + 1) if j < n else (n - 1, n)


@dataclass(frozen=True, eq=False)
class GateNoiseModel:
    """Map from gate parameters to twirled eigenvalue vectors (and optionally
    the Pauli channels they came from)."""

    n: int
    xi: Mapping[GateId, np.ndarray]
    channels: Mapping[GateId, PauliChannel] = field(default_factory=dict)

    def __post_init__(self):
        xi = {}
        for g, ch in self.channels.items():
            if ch.n != self.n:
                raise ValueError(f"channel for {g} acts on {ch.n} qubits, not {self.n}")
            twirled = channel_eigs(flo_twirl_pauli(ch))
            if g in self.xi and not np.allclose(self.xi[g], twirled, rtol=0, atol=1e-12):
                raise ValueError(f"eigenvalues for {g} disagree with its Pauli channel")
            xi[g] = twirled
        for g, v in self.xi.items():
            if g not in xi:
                v = np.array(v, dtype=float)
                if v.shape != (2 * self.n + 1,) or v[0] != 1.0:
                    raise ValueError(f"eigenvalues for {g} need length {2 * self.n + 1} and xi_0 = 1")
                if np.abs(v).max() > 1.0 + 1e-12:
                    raise ValueError(f"eigenvalues for {g} exceed 1 in magnitude")
                xi[g] = v
        weak = [str(g) for g, v in xi.items() if v.min() < 1 - C_PRIME]
        if weak:
            warnings.warn(
                f"eigenvalues below {1 - C_PRIME} for {', '.join(weak[:5])}",
                WeakEigenvalueWarning,
                stacklevel=2,
            )
        for v in xi.values():
            v.setflags(write=False)
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "channels", dict(self.channels))

    @classmethod
    def noiseless(cls, n: int, gates) -> GateNoiseModel:
        return cls(n, {g: np.ones(2 * n + 1) for g in gates})

    @property
    def gates(self) -> list[GateId]:
        return sorted(self.xi, key=gate_sort_key)

    def eigs(self, gate: GateId) -> np.ndarray:
        try:
            return self.xi[gate]
        except KeyError:
            raise UnknownGateError(f"gate {gate} is not in the noise model") from None

    def to_json(self) -> str:
        gates = {}
        for g in self.gates:
            if g in self.channels:
                gates[str(g)] = {"pauli": dict(sorted(self.channels[g].probs.items()))}
            else:
                gates[str(g)] = {"xi": [float(v) for v in self.xi[g]]}
        return json.dumps({"n": self.n, "gates": gates}, indent=1)

    @classmethod
    def from_json(cls, text: str) -> GateNoiseModel:
        doc = json.loads(text)
        n = doc["n"]
        xi, channels = {}, {}
        for key, entry in doc["gates"].items():
            g = parse_gate_id(key)
            if "pauli" in entry:
                channels[g] = PauliChannel(n, entry["pauli"])
            else:
                xi[g] = np.array(entry["xi"], dtype=float)
        return cls(n, xi, channels)


def noisy_gate_eigs(gate: GateId, model: GateNoiseModel) -> np.ndarray:
    return model.eigs(gate)


def random_noise_model(
    n: int,
    gates,
    rng: np.random.Generator,
    center: float = 1e-2,
    halfwidth: float = 1e-3,
) -> GateNoiseModel:
    """Independent random Pauli channel per gate parameter, drawn in ``gates`` order."""
    channels = {
        g: random_pauli_noise(noise_support(g, n), n, rng, center, halfwidth) for g in gates
    }
    return GateNoiseModel(n, {}, channels)
