"""In-memory experiment runs shared by the CLI, the scripts and the tests."""
from __future__ import annotations

import numpy as np

from . import design as design_mod
from . import fermion, simulate
from .config import ExperimentConfig
from .design import FacesModel
from .estimate import EstimationReport, run_estimation
from .kravchuk import BornDistribution, born_to_circuit_eigs
from .noise import random_noise_model

# stream tags under the master seed
NOISE_STREAM, CIRCUIT_STREAM = 1, 2


def noise_rng(cfg: ExperimentConfig) -> np.random.Generator:
    if cfg.noise_seed is not None:
        return np.random.default_rng(cfg.noise_seed)
    return np.random.default_rng([cfg.seed, NOISE_STREAM])


def draw_model(cfg: ExperimentConfig) -> tuple[FacesModel, list[int]]:
    """Random noise model and circuit ensemble; also returns the rank-deficient degrees."""
    registry = fermion.gate_registry(cfg.n, cfg.n_bins)
    noise = random_noise_model(cfg.n, registry, noise_rng(cfg), cfg.noise_center, cfg.noise_halfwidth)
    circuits, design, bad = design_mod.draw_ensemble(
        cfg.n,
        cfg.n_bins,
        cfg.count_z,
        cfg.count_x,
        cfg.depth_range,
        cfg.x_depth_range,
        np.random.default_rng([cfg.seed, CIRCUIT_STREAM]),
        cfg.max_retries,
        seed=(cfg.seed, CIRCUIT_STREAM),
    )
    return FacesModel(cfg.n, cfg.n_bins, noise, circuits, design), bad


def estimate_from(
    model: FacesModel,
    observed: list[BornDistribution],
    cutoff: float,
    method: str = "pinv",
    exact: list[BornDistribution] | None = None,
) -> EstimationReport:
    """Estimate every gate eigenvalue from observed distributions, scored against the model.

    Pass the model's exact distributions as ``exact`` to record the measured
    Born error and the per-degree bound.
    """
    born_error = None
    if exact is not None:
        born_error = np.array([np.abs(o.vector() - e.vector()).sum() for o, e in zip(observed, exact)])
    lam_hat = np.array([born_to_circuit_eigs(P) for P in observed])
    xi_true = np.stack([model.noise.eigs(g) for g in model.design.gates])
    return run_estimation(
        model.design,
        lam_hat,
        model.n,
        cutoff,
        xi_true=xi_true,
        lam_true=model.eigenvalue_table(),
        born_error=born_error,
        method=method,
    )


def run_exact(model: FacesModel, cutoff: float, method: str = "pinv") -> EstimationReport:
    return estimate_from(model, simulate.exact_born_all(model), cutoff, method)


def run_shots(
    model: FacesModel, shots: int, seed: int, cutoff: float, method: str = "pinv", workers: int = 1
) -> EstimationReport:
    exact = simulate.exact_born_all(model)
    records = simulate.sample_all(exact, shots, seed, workers)
    observed = [simulate.empirical_born(r) for r in records]
    return estimate_from(model, observed, cutoff, method, exact=exact)
