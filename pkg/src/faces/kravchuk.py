"""Kravchuk matrices and the probability/eigenvalue transforms built on them.

Indices are 0-based weights: row ``j`` and column ``k`` of the order-``l``
Kravchuk matrix run over ``0..l``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np

# Entries fit in int64 up to this order (max |entry| <= C(60, 30) < 2**63).
MAX_ORDER = 60

NORM_ATOL = 1e-12
NEGATIVE_PROB_TOL = 1e-10


class NonPhysicalWarning(UserWarning):
    """An inverse transform produced probabilities noticeably below zero."""


class NonPhysicalError(ValueError):
    pass


def _check_order(order: int) -> None:
    if order < 0:
        raise ValueError(f"order must be non-negative, got {order}")
    if order > MAX_ORDER:
        raise OverflowError(
            f"order {order} exceeds int64 capacity (max {MAX_ORDER})"
        )


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@lru_cache(maxsize=None)
def kravchuk_matrix(order: int) -> np.ndarray:
    """Integer Kravchuk matrix ``M[j, k] = e_k(-1 (j times), +1 (order-j times))``.

    Built from the signed binomial sum
    ``sum_m C(order-j, k-m) C(j, m) (-1)^m`` in exact integer arithmetic.
    The returned array is read-only and cached.
    """
    _check_order(order)
    size = order + 1
    out = np.zeros((size, size), dtype=np.int64)
    for j in range(size):
        for k in range(size):
            lo, hi = max(0, k + j - order), min(j, k)
            out[j, k] = sum(
                comb(order - j, k - m) * comb(j, m) * (-1) ** m
                for m in range(lo, hi + 1)
            )
    return _frozen(out)


@lru_cache(maxsize=None)
def antipode(order: int) -> np.ndarray:
    """Permutation ``perm`` with ``perm[j] = j`` for even ``j`` and ``order - j`` for odd ``j``."""
    _check_order(order)
    if order % 2:
        raise ValueError(f"antipode is defined for even order only, got {order}")
    perm = np.array(
        [j if j % 2 == 0 else order - j for j in range(order + 1)], dtype=np.int64
    )
    return _frozen(perm)


def antipode_matrix(order: int) -> np.ndarray:
    perm = antipode(order)
    s = np.zeros((order + 1, order + 1), dtype=np.int64)
    s[np.arange(order + 1), perm] = 1
    return s


@lru_cache(maxsize=None)
def binom_diag(order: int) -> np.ndarray:
    """Diagonal ``(C(order, 0), ..., C(order, order))`` as an int64 vector."""
    _check_order(order)
    return _frozen(np.array([comb(order, k) for k in range(order + 1)], dtype=np.int64))


def _modes_of(vec: np.ndarray) -> int:
    modes = len(vec) - 1
    if modes < 0 or modes % 2:
        raise ValueError(
            f"expected a vector of length 2n+1 over Majorana degrees, got length {len(vec)}"
        )
    return modes


def probs_to_eigs(q) -> np.ndarray:
    """Channel eigenvalues ``xi = s M d^-1 q`` of a fermionic error distribution."""
    q = np.asarray(q, dtype=float)
    modes = _modes_of(q)
    if q.min() < -NORM_ATOL or abs(q.sum() - 1.0) > NORM_ATOL:
        raise ValueError(f"q is not a probability vector (sum={q.sum()!r}, min={q.min()!r})")
    M = kravchuk_matrix(modes).astype(float)
    xi = M @ (q / binom_diag(modes))
    xi = xi[antipode(modes)]
    xi[0] = 1.0
    return xi


def eigs_to_probs(xi, strict: bool = False) -> np.ndarray:
    """Fermionic error probabilities ``q = 4^-n d M s xi``.

    Negative entries below ``-1e-10`` mean ``xi`` is not the eigenvalue vector
    of any channel. They are returned unclipped; a ``NonPhysicalWarning`` is
    issued, or ``NonPhysicalError`` raised when ``strict``.
    """
    xi = np.asarray(xi, dtype=float)
    modes = _modes_of(xi)
    if abs(xi[0] - 1.0) > NORM_ATOL:
        raise ValueError(f"xi[0] must equal 1, got {xi[0]!r}")
    M = kravchuk_matrix(modes).astype(float)
    q = binom_diag(modes) * (M @ xi[antipode(modes)])
    q /= 2.0**modes
    worst = q.min()
    if worst < -NEGATIVE_PROB_TOL:
        msg = f"non-physical eigenvalues: most negative probability {worst:.3e}"
        if strict:
            raise NonPhysicalError(msg)
        warnings.warn(msg, NonPhysicalWarning, stacklevel=2)
    return q


@dataclass(frozen=True, eq=False)
class BornDistribution:
    """Hamming-weight-resolved outcome distribution of one circuit.

    ``kind == "z"``: ``p0[l]`` for weights ``l = 0..n``.
    ``kind == "x"``: ``plus[l]``/``minus[l]`` for the y-basis sign of qubit 1
    and weight ``l = 0..n-1`` of the remaining qubits.
    """

    kind: str
    n: int
    p0: np.ndarray | None = None
    plus: np.ndarray | None = None
    minus: np.ndarray | None = None

    def __post_init__(self):
        if self.kind == "z":
            if self.p0 is None or len(self.p0) != self.n + 1:
                raise ValueError("z-kind distribution needs p0 of length n+1")
        elif self.kind == "x":
            if self.plus is None or self.minus is None:
                raise ValueError("x-kind distribution needs plus and minus")
            if len(self.plus) != self.n or len(self.minus) != self.n:
                raise ValueError("x-kind plus/minus must have length n")
        else:
            raise ValueError(f"unknown kind {self.kind!r}")
        for name in ("p0", "plus", "minus"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.array(arr, dtype=float)
                arr.setflags(write=False)
                object.__setattr__(self, name, arr)

    @classmethod
    def from_vector(cls, kind: str, n: int, vec) -> BornDistribution:
        vec = np.asarray(vec, dtype=float)
        if kind == "z":
            return cls("z", n, p0=vec)
        return cls("x", n, plus=vec[:n], minus=vec[n:])

    def vector(self) -> np.ndarray:
        """Flat outcome vector: ``p0`` for z-kind, ``plus`` then ``minus`` for x-kind."""
        if self.kind == "z":
            return self.p0.copy()
        return np.concatenate([self.plus, self.minus])

    @property
    def mass(self) -> float:
        return float(self.vector().sum())

    def half_sum(self) -> np.ndarray:
        return 0.5 * (self.plus + self.minus)

    def half_diff(self) -> np.ndarray:
        return 0.5 * (self.plus - self.minus)

    def labels(self) -> list[str]:
        if self.kind == "z":
            return [f"w{l}" for l in range(self.n + 1)]
        return [f"+w{l}" for l in range(self.n)] + [f"-w{l}" for l in range(self.n)]


def _check_lambda(lam, n: int) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    if len(lam) != 2 * n + 1:
        raise ValueError(
            f"circuit eigenvalues must be indexed by degree 0..{2 * n} "
            f"(length {2 * n + 1}), got length {len(lam)}"
        )
    return lam


def circuit_eigs_to_born(lam, kind: str, n: int) -> BornDistribution:
    """Born distribution of a net-identity (z) or net-U+ (x) circuit.

    ``lam`` is indexed by Majorana degree ``0..2n``. A z-kind circuit reads
    the even degrees; an x-kind circuit reads degrees ``0..2n-1``. Entries at
    unread degrees are ignored (they may be NaN).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    lam = _check_lambda(lam, n)
    if kind == "z":
        M = kravchuk_matrix(n).astype(float)
        p0 = binom_diag(n) * (M @ lam[0::2]) / 2.0**n
        return BornDistribution("z", n, p0=p0)
    if kind == "x":
        M = kravchuk_matrix(n - 1).astype(float)
        d = binom_diag(n - 1)
        even = lam[0 : 2 * n : 2]
        odd = lam[1 : 2 * n : 2]
        half_sum = d * (M @ even) / 2.0**n
        half_diff = d * (M @ odd) / 2.0**n
        return BornDistribution("x", n, plus=half_sum + half_diff, minus=half_sum - half_diff)
    raise ValueError(f"unknown kind {kind!r}")


def born_to_circuit_eigs(P: BornDistribution) -> np.ndarray:
    """Invert :func:`circuit_eigs_to_born`.

    Returns a length ``2n+1`` vector; degrees not observed by the circuit kind
    are NaN (odd degrees for z, degree ``2n`` for x). Sampled inputs may give
    values outside ``[0, 1]``; these are returned as-is. ``lam[0]`` is set to
    exactly 1.
    """
    n = P.n
    lam = np.full(2 * n + 1, np.nan)
    if P.kind == "z":
        M = kravchuk_matrix(n).astype(float)
        lam[0::2] = M @ (P.p0 / binom_diag(n))
    else:
        M = kravchuk_matrix(n - 1).astype(float)
        d = binom_diag(n - 1)
        lam[0 : 2 * n : 2] = M @ ((P.plus + P.minus) / d)
        lam[1 : 2 * n : 2] = M @ ((P.plus - P.minus) / d)
    lam[0] = 1.0
    return lam


def observed_degrees(kind: str, n: int) -> list[int]:
    """Majorana degrees ``k >= 1`` whose circuit eigenvalue a circuit kind reveals."""
    if kind == "z":
        return list(range(2, 2 * n + 1, 2))
    if kind == "x":
        return list(range(1, 2 * n))
    raise ValueError(f"unknown kind {kind!r}")
