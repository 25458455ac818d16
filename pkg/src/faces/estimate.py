"""Log-linear estimation of gate eigenvalues from circuit eigenvalue estimates."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import nnls

from .design import DesignMatrix, IdentifiabilityError, full_column_rank, per_degree_rows
from .kravchuk import BornDistribution, born_to_circuit_eigs

DEFAULT_CUTOFF = 0.1
# Constant in front of n ||A^+||^2 log(m / delta) / eps^2; an implementation choice.
SHOTS_CONSTANT = 2.0


class CutoffRankError(IdentifiabilityError):
    pass


def estimate_circuit_eigs(P: BornDistribution) -> np.ndarray:
    """Circuit eigenvalue estimates (NaN at degrees the circuit kind does not reveal)."""
    return born_to_circuit_eigs(P)


@dataclass(frozen=True)
class GateEigsFit:
    xi_hat: np.ndarray
    kept: np.ndarray  # boolean mask over the input rows
    x_ls: np.ndarray  # unprojected least-squares solution
    pinv_norm: float

    @property
    def dropped(self) -> int:
        return int((~self.kept).sum())


def estimate_gate_eigs(A_k, lam_hat, cutoff: float = DEFAULT_CUTOFF, method: str = "pinv") -> GateEigsFit:
    """Fit ``-log xi`` to ``-log Lambda`` for one Majorana degree.

    Rows with ``lam_hat <= cutoff`` are dropped and values above 1 clipped to
    1. ``method="pinv"`` is ordinary least squares projected onto the
    positive orthant; ``method="nnls"`` solves the positivity-constrained
    problem instead.
    """
    A_k = np.asarray(A_k, dtype=float)
    lam_hat = np.asarray(lam_hat, dtype=float)
    if A_k.shape[0] != len(lam_hat):
        raise ValueError("one circuit eigenvalue per design row is required")
    kept = lam_hat > cutoff
    A = A_k[kept]
    if not full_column_rank(A):
        raise CutoffRankError(f"A is not full rank with cutoff {cutoff}.")
    b = -np.log(np.minimum(lam_hat[kept], 1.0))
    pinv = np.linalg.pinv(A)
    x_ls = pinv @ b
    if method == "pinv":
        x = np.maximum(x_ls, 0.0)
    elif method == "nnls":
        x = nnls(A, b)[0]
    else:
        raise ValueError(f"unknown method {method!r}")
    return GateEigsFit(np.exp(-x), kept, x_ls, float(np.abs(pinv).sum(axis=1).max()))


@dataclass
class DegreeSummary:
    degree: int
    pinv_norm: float
    rows: int
    dropped: int
    bound: float | None = None
    max_abs_error: float | None = None
    hypotheses_hold: bool | None = None

    @property
    def bound_violated(self) -> bool:
        return bool(
            self.hypotheses_hold and self.bound is not None and self.max_abs_error > self.bound
        )


@dataclass
class EstimationReport:
    n: int
    gates: tuple
    xi_hat: np.ndarray  # (K, 2n+1), column 0 fixed to 1
    xi_true: np.ndarray | None
    degrees: list[DegreeSummary]
    epsilon: float | None = None
    meta: dict = field(default_factory=dict)

    def rel_errors(self) -> np.ndarray:
        """``|xi_hat - xi| / |xi|`` over degrees ``1..2n`` (shape ``(K, 2n)``)."""
        if self.xi_true is None:
            raise ValueError("no ground truth in this report")
        t = self.xi_true[:, 1:]
        return np.abs(self.xi_hat[:, 1:] - t) / np.abs(t)

    def abs_errors(self) -> np.ndarray:
        return np.abs(self.xi_hat[:, 1:] - self.xi_true[:, 1:])

    @property
    def bound_violated(self) -> bool:
        return any(d.bound_violated for d in self.degrees)

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["gate_id", "degree", "xi_true", "xi_hat", "rel_error"])
        rel = self.rel_errors() if self.xi_true is not None else None
        for i, g in enumerate(self.gates):
            for k in range(1, 2 * self.n + 1):
                true = repr(float(self.xi_true[i, k])) if self.xi_true is not None else ""
                err = repr(float(rel[i, k - 1])) if rel is not None else ""
                w.writerow([str(g), k, true, repr(float(self.xi_hat[i, k])), err])
        return out.getvalue()

    def summary(self) -> dict:
        doc = {
            "n": self.n,
            "epsilon": self.epsilon,
            "degrees": [
                {
                    "degree": d.degree,
                    "pinv_inf_norm": d.pinv_norm,
                    "rows": d.rows,
                    "dropped_rows": d.dropped,
                    "bound": d.bound,
                    "max_abs_error": d.max_abs_error,
                    "hypotheses_hold": d.hypotheses_hold,
                    "bound_violated": d.bound_violated,
                }
                for d in self.degrees
            ],
            **self.meta,
        }
        if self.xi_true is not None:
            rel = self.rel_errors()
            doc["median_rel_error"] = float(np.median(rel))
            doc["fraction_below_5pct"] = float((rel < 0.05).mean())
        return doc

    def summary_json(self) -> str:
        return json.dumps(self.summary(), indent=1, sort_keys=True)


def run_estimation(
    design: DesignMatrix,
    lam_hat: np.ndarray,
    n: int,
    cutoff: float = DEFAULT_CUTOFF,
    xi_true: np.ndarray | None = None,
    lam_true: np.ndarray | None = None,
    born_error: np.ndarray | None = None,
    method: str = "pinv",
) -> EstimationReport:
    """Estimate all gate eigenvalues degree by degree.

    ``lam_hat[j, k]`` are circuit eigenvalue estimates. With ground truth
    (``xi_true`` of shape ``(K, 2n+1)``, ``lam_true`` and the per-circuit
    1-norm Born errors ``born_error``) each degree also records the
    ``4 ||A^+|| eps`` bound and whether its hypotheses held.
    """
    K = len(design.gates)
    xi_hat = np.ones((K, 2 * n + 1))
    eps = float(np.max(born_error)) if born_error is not None else None
    degrees = []
    for k in range(1, 2 * n + 1):
        A_k, rows = per_degree_rows(design, k, n)
        fit = estimate_gate_eigs(A_k, lam_hat[rows, k], cutoff, method)
        xi_hat[:, k] = fit.xi_hat
        summary = DegreeSummary(k, fit.pinv_norm, len(rows), fit.dropped)
        if xi_true is not None:
            summary.max_abs_error = float(np.abs(fit.xi_hat - xi_true[:, k]).max())
        if eps is not None:
            summary.bound = 4.0 * fit.pinv_norm * eps
        if lam_true is not None:
            used = rows[fit.kept]
            summary.hypotheses_hold = bool(
                np.all(lam_true[used, k] >= 0.5) and np.all(lam_hat[used, k] >= 0.25)
            )
        degrees.append(summary)
    return EstimationReport(n, design.gates, xi_hat, xi_true, degrees, eps)


def required_shots(
    n: int, m: int, eps: float, delta_fail: float, pinv_norm: float, constant: float = SHOTS_CONSTANT
) -> float:
    """Shots per circuit for ``||xi_hat - xi||_inf <= eps`` w.p. ``1 - delta_fail`` (advisory)."""
    if not 0 < eps <= 0.25:
        raise ValueError(f"eps must lie in (0, 1/4], got {eps}")
    if not 0 < delta_fail < 1:
        raise ValueError(f"delta_fail must lie in (0, 1), got {delta_fail}")
    return constant * n * pinv_norm**2 * math.log(m / delta_fail) / eps**2
