"""Acceptance criteria, each run at its stated tolerance.

Every test prints one ``ACCEPT <id> PASS|FAIL`` line (visible with or without
``-s``) and then asserts the same condition.
"""
import functools
import itertools
import math
import time
from pathlib import Path

import numpy as np
import pytest
from scipy.stats import binomtest

from faces import design as D
from faces import experiment
from faces import fermion as F
from faces import oracle as O
from faces import simulate
from faces.cli import run_pipeline
from faces.config import ExperimentConfig, desk_scale
from faces.kravchuk import antipode_matrix, eigs_to_probs, kravchuk_matrix, probs_to_eigs
from faces.noise import PauliChannel, flo_twirl_pauli, random_noise_model


@pytest.fixture
def verdict(capsys):
    def emit(cid, ok, what, elapsed=None, limit=None):
        timing = ""
        if elapsed is not None:
            timing = f" [{elapsed:.1f}s" + (f" / limit {limit:.0f}s]" if limit else "]")
        with capsys.disabled():
            print(f"\nACCEPT {cid} {'PASS' if ok else 'FAIL'}: {what}{timing}")
        assert ok, what

    return emit


# --- 1-3: Kravchuk transform ----------------------------------------------------


def test_1_kravchuk_involution(verdict):
    t0 = time.perf_counter()
    ok = True
    for order in range(17):
        M = kravchuk_matrix(order)
        ok &= M.dtype == np.int64 and np.array_equal(M @ M, 2**order * np.eye(order + 1, dtype=np.int64))
    dt = time.perf_counter() - t0
    verdict(1, bool(ok) and dt < 1.0, "M^2 = 2^l I exactly for l <= 16", dt, 1)


def _e_k(values, k):
    return sum(math.prod(c) for c in itertools.combinations(values, k))


def test_2_antipode_commutation_and_entry_formulas(verdict):
    t0 = time.perf_counter()
    ok = True
    for order in range(0, 17, 2):
        M, s = kravchuk_matrix(order), antipode_matrix(order)
        j, k = np.indices(M.shape)
        ok &= np.array_equal(s @ M, M @ s) and np.array_equal(s @ M, (-1) ** (j * k) * M)
    for order in range(11):
        brute = np.array(
            [[_e_k([-1] * j + [1] * (order - j), k) for k in range(order + 1)] for j in range(order + 1)]
        )
        poly = np.array(
            [
                np.rint(
                    np.polynomial.polynomial.polymul(
                        np.polynomial.polynomial.polypow([1, -1], j),
                        np.polynomial.polynomial.polypow([1, 1], order - j),
                    )[: order + 1]
                ).astype(np.int64)
                for j in range(order + 1)
            ]
        )
        ok &= np.array_equal(kravchuk_matrix(order), brute) and np.array_equal(brute, poly)
    dt = time.perf_counter() - t0
    verdict(2, bool(ok) and dt < 10.0, "sM = Ms = signed entries (l <= 16); subset sums agree (l <= 10)", dt, 10)


def test_3_eigenvalue_probability_duality(verdict):
    t0 = time.perf_counter()
    worst = 0.0
    for modes in range(2, 13, 2):
        rng = np.random.default_rng(modes)
        for _ in range(1000):
            q = rng.dirichlet(np.ones(modes + 1))
            worst = max(worst, np.abs(eigs_to_probs(probs_to_eigs(q)) - q).max())
            xi = probs_to_eigs(rng.dirichlet(np.ones(modes + 1)))
            worst = max(worst, np.abs(probs_to_eigs(eigs_to_probs(xi)) - xi).max())
        dep = np.array([math.comb(modes, k) for k in range(modes + 1)]) / 2.0**modes
        target = np.zeros(modes + 1)
        target[0] = 1.0
        worst = max(worst, np.abs(probs_to_eigs(dep) - target).max())
    dt = time.perf_counter() - t0
    verdict(3, worst <= 1e-12, f"round trips and depolarizing within 1e-12 (worst {worst:.1e})", dt)


# --- 4-5: dense oracle cross-checks ---------------------------------------------


@functools.lru_cache(maxsize=None)
def _monomial_table(n):
    """Flattened dense Majorana monomials built from explicit JW matrices, and their degrees."""
    I2, X, Y, Z = (O.dense_pauli(c) for c in "IXYZ")
    gam = []
    for j in range(n):
        for P in (X, Y):
            gam.append(O.kron(*([Z] * j + [P] + [I2] * (n - j - 1))))
    rows, degs = [], []
    for alpha in F.all_monomials(2 * n):
        m = functools.reduce(np.matmul, [gam[a - 1] for a in alpha], np.eye(2**n, dtype=complex))
        rows.append(m.ravel())
        degs.append(len(alpha))
    return np.stack(rows), np.array(degs)


def _dense_degree(label):
    table, degs = _monomial_table(len(label))
    hits = np.flatnonzero(np.abs(table.conj() @ O.dense_pauli(label).ravel()) > 1e-9)
    assert len(hits) == 1
    return int(degs[hits[0]])


def _random_channel(n, rng):
    labels = O.pauli_labels(n)
    w = rng.dirichlet(np.ones(len(labels)) * 0.5) * 0.2
    w[0] += 0.8
    return PauliChannel(n, {lbl: float(p) for lbl, p in zip(labels, w / w.sum())})


@pytest.mark.slow
def test_4_combinatorial_twirl_probabilities(verdict):
    t0 = time.perf_counter()
    exact_ok = True
    for n in range(1, 6):
        width = min(n, 2)
        for start in range(n - width + 1):
            for pair in itertools.product("IXYZ", repeat=width):
                label = "I" * start + "".join(pair) + "I" * (n - start - width)
                q = flo_twirl_pauli(PauliChannel(n, {label: 1.0}))
                expected = np.zeros(2 * n + 1)
                expected[_dense_degree(label)] = 1.0
                exact_ok &= np.array_equal(q, expected)
    T = 4000
    worst, worst_res = 0.0, 0.0
    for n in (2, 3):
        rng = np.random.default_rng(100 + n)
        for _ in range(20):
            ch = _random_channel(n, rng)
            ex = O.extract_fermionic_probs(O.mc_flo_twirl(O.ptm_of_pauli_channel(ch), T, rng))
            worst = max(worst, np.abs(ex.q - flo_twirl_pauli(ch)).max())
            worst_res = max(worst_res, ex.residual)
    dt = time.perf_counter() - t0
    ok = bool(exact_ok) and worst <= 4 / math.sqrt(T) and dt < 300
    verdict(
        4,
        ok,
        f"dense degree classification exact (n <= 5); MC twirl |dq| {worst:.1e} <= {4 / math.sqrt(T):.3f}"
        f" (off-twirl residual {worst_res:.1e})",
        dt,
        300,
    )


@pytest.mark.slow
def test_5_born_probabilities_vs_dense_oracle(verdict):
    t0 = time.perf_counter()
    n, T = 3, 2000
    rng = np.random.default_rng(55)
    noise = random_noise_model(n, F.gate_registry(n, 46), rng)
    worst_z = 0.0
    for j in range(10):
        build = D.build_z_circuit if j % 2 == 0 else D.build_x_circuit
        c = build(rng, int(rng.integers(1, 3)), n, 46)
        model = D.FacesModel.build(n, 46, noise, [c])
        exact = simulate.exact_born(model, 0).vector()
        res = O.oracle_born(c, noise, T, rng)
        # |dP| <= 4 SE + 1e-12, written as a ratio against SE
        z = np.abs(res.born.vector() - exact) / (res.stderr + 2.5e-13)
        worst_z = max(worst_z, float(z.max()))
    dt = time.perf_counter() - t0
    verdict(5, worst_z <= 4 and dt < 600, f"10 circuits at n = 3 within 4 SE (worst {worst_z:.2f} SE)", dt, 600)


# --- 6-8: estimation ------------------------------------------------------------

EXACT_RECOVERY = ExperimentConfig(
    n=5,
    count_z=300,
    count_x=300,
    depth_range=(2, 8),
    x_depth_range=(2, 6),
    cutoff=1e-6,
    max_retries=20,
    seed=6,
)


def test_6_exact_recovery(verdict):
    t0 = time.perf_counter()
    model, bad = experiment.draw_model(EXACT_RECOVERY)
    assert bad == []
    err = float(experiment.run_exact(model, EXACT_RECOVERY.cutoff).rel_errors().max())
    dt = time.perf_counter() - t0
    verdict(6, err < 1e-8 and dt < 120, f"n = 5, 300 circuits per type: max relative error {err:.1e}", dt, 120)


@pytest.mark.slow
def test_7_desk_scale_reproduction(verdict):
    t0 = time.perf_counter()
    cfg = desk_scale()
    model, bad = experiment.draw_model(cfg)
    assert bad == []
    rel = experiment.run_shots(model, cfg.shots, cfg.seed, cfg.cutoff).rel_errors()
    med, frac = float(np.median(rel)), float((rel < 0.05).mean())

    shot_grid = (10**3, 10**4, 10**5)
    monotone = 0
    table = []
    for seed in range(10):
        c = desk_scale(seed=seed)
        m, bad = experiment.draw_model(c)
        assert bad == []
        meds = [float(np.median(experiment.run_shots(m, S, seed, c.cutoff).rel_errors())) for S in shot_grid]
        table.append(meds)
        monotone += meds[0] > meds[1] > meds[2]
    p = binomtest(monotone, 10, alternative="greater").pvalue
    dt = time.perf_counter() - t0
    avg = np.mean(table, axis=0)
    ok = med < 0.05 and p < 0.05 and dt < 1800
    verdict(
        7,
        ok,
        f"S = 1e5 median relative error {med:.2%} ({frac:.0%} of estimates under 5%); "
        f"monotone in {monotone}/10 seeds, sign test p = {p:.3g}; "
        f"mean medians {', '.join(f'{v:.2%}' for v in avg)} at S = 1e3, 1e4, 1e5",
        dt,
        1800,
    )


BOUND_TRIALS = ExperimentConfig(
    n=3, count_z=300, count_x=300, shots=10_000, noise_center=1e-3, noise_halfwidth=1e-4
)


def test_8_error_bound(verdict):
    t0 = time.perf_counter()
    held, violated, skipped, slack = 0, 0, 0, []
    seed = 0
    while held < 50 and seed < 500:
        cfg = BOUND_TRIALS.replace(seed=seed)
        seed += 1
        model, bad = experiment.draw_model(cfg)
        if bad:
            skipped += 1
            continue
        report = experiment.run_shots(model, cfg.shots, cfg.seed, cfg.cutoff)
        lam_true = model.eigenvalue_table()
        # hypotheses checked on every row of every degree, not assumed
        rows_ok = all(d.dropped == 0 and d.hypotheses_hold for d in report.degrees)
        rows_ok &= bool(np.all(np.nan_to_num(lam_true, nan=1.0) >= 0.5))
        if not rows_ok:
            skipped += 1
            continue
        held += 1
        violated += any(d.max_abs_error > d.bound for d in report.degrees)
        for d in report.degrees:
            slack.append(d.bound / max(d.max_abs_error, 1e-300))
    dt = time.perf_counter() - t0
    ok = held == 50 and violated == 0 and dt < 600
    verdict(
        8,
        ok,
        f"bound held in {held - violated}/{held} hypothesis-verified trials "
        f"({skipped} skipped; smallest bound/error ratio {min(slack):.1f})",
        dt,
        600,
    )


# --- 9: determinism -------------------------------------------------------------


def _tree(root: Path) -> dict[str, bytes]:
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_9_determinism_across_workers(verdict, tmp_path):
    t0 = time.perf_counter()
    trees = []
    for workers in (1, 8):
        for rep in range(2):
            out = tmp_path / f"w{workers}_{rep}"
            run_pipeline(desk_scale(out_dir=str(out), workers=workers))
            trees.append(_tree(out))
    same = all(t == trees[0] for t in trees)
    dt = time.perf_counter() - t0
    verdict(9, same and len(trees[0]) >= 10, f"{len(trees[0])} output files byte-identical over 4 runs (workers 1, 8)", dt)
