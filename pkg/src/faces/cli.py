"""Command-line pipeline: generate -> run -> estimate -> report.

All artifacts live in one output directory and are plain JSON, JSON lines or
CSV. Given a config and seed every file is byte-for-byte reproducible,
independent of the worker count.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import design as design_mod
from . import experiment, simulate
from .config import ExperimentConfig
from .design import FacesModel, IdentifiabilityError
from .estimate import CutoffRankError, EstimationReport
from .kravchuk import BornDistribution
from .noise import GateNoiseModel

log = logging.getLogger("faces")

EXIT_OK, EXIT_IDENTIFIABILITY, EXIT_CUTOFF_RANK, EXIT_BOUND = 0, 2, 3, 4

# fields that do not affect any result
EXECUTION_FIELDS = ("out_dir", "workers")

CONFIG_FILE = "config.json"
NOISE_FILE = "noise_model.json"
CIRCUITS_FILE = "circuits.jsonl"
DESIGN_FILE = "design.csv"
SHOTS_FILE = "shots.csv"
BORN_FILE = "born.csv"
MANIFEST_FILE = "manifest.json"
REPORT_CSV = "report.csv"
REPORT_JSON = "report.json"
HIST_CSV = "histogram.csv"
HIST_META = "histogram_meta.json"
SUMMARY_FILE = "summary.txt"


def _out(cfg: ExperimentConfig) -> Path:
    path = Path(cfg.out_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _read(path: Path) -> str:
    if not path.exists():
        raise FileNotFoundError(f"missing artifact {path}; run the earlier pipeline step first")
    return path.read_text()


def experiment_json(cfg: ExperimentConfig) -> str:
    """Config as written to the output directory, without execution-only fields."""
    d = cfg.to_dict()
    for key in EXECUTION_FIELDS:
        d.pop(key)
    return json.dumps(d, indent=1, sort_keys=True) + "\n"


# --- generate -------------------------------------------------------------------


def cmd_generate(cfg: ExperimentConfig) -> FacesModel:
    """Write the noise model, circuits and design matrix; raise on per-degree rank loss.

    The files are written before the rank check so a failed ensemble can be inspected.
    """
    out = _out(cfg)
    model, bad = experiment.draw_model(cfg)
    noise, circuits, design = model.noise, model.circuits, model.design
    (out / CONFIG_FILE).write_text(experiment_json(cfg))
    (out / NOISE_FILE).write_text(noise.to_json() + "\n")
    (out / CIRCUITS_FILE).write_text(design_mod.circuits_to_jsonl(circuits))
    (out / DESIGN_FILE).write_text(design.to_csv())
    if bad:
        raise IdentifiabilityError(
            f"A_k is not full rank for degrees {bad}; M is not identifiable from C.", bad
        )
    log.info("generated %d circuits over %d gate parameters", len(circuits), len(design.gates))
    return model


def load_model(cfg: ExperimentConfig) -> FacesModel:
    out = Path(cfg.out_dir)
    noise = GateNoiseModel.from_json(_read(out / NOISE_FILE))
    circuits = design_mod.circuits_from_jsonl(_read(out / CIRCUITS_FILE))
    return FacesModel.build(cfg.n, cfg.n_bins, noise, circuits)


def model_hash(cfg: ExperimentConfig) -> str:
    out = Path(cfg.out_dir)
    h = hashlib.sha256()
    for name in (NOISE_FILE, CIRCUITS_FILE):
        h.update(_read(out / name).encode())
    return h.hexdigest()


# --- run ------------------------------------------------------------------------


def born_to_csv(born: list[BornDistribution]) -> str:
    lines = ["circuit_id,kind,bin_label,probability"]
    for j, P in enumerate(born):
        for label, p in zip(P.labels(), P.vector()):
            lines.append(f"{j},{P.kind},{label},{float(p)!r}")
    return "\n".join(lines) + "\n"


def born_from_csv(text: str, n: int) -> list[BornDistribution]:
    rows: dict[int, tuple[str, list[float]]] = {}
    for rec in csv.DictReader(io.StringIO(text)):
        rows.setdefault(int(rec["circuit_id"]), (rec["kind"], []))[1].append(float(rec["probability"]))
    return [BornDistribution.from_vector(kind, n, np.array(v)) for _, (kind, v) in sorted(rows.items())]


def cmd_run(cfg: ExperimentConfig, exact: bool = False) -> None:
    """Simulate every circuit: exact Born probabilities, or ``cfg.shots`` samples each."""
    out = _out(cfg)
    model = load_model(cfg)
    born = simulate.exact_born_all(model)
    if exact:
        (out / BORN_FILE).write_text(born_to_csv(born))
        shots = None
    else:
        records = simulate.sample_all(born, cfg.shots, cfg.seed, cfg.workers)
        (out / SHOTS_FILE).write_text(simulate.records_to_csv(records))
        shots = cfg.shots
    manifest = simulate.run_manifest(cfg.seed, shots, model_hash(cfg), len(born))
    (out / MANIFEST_FILE).write_text(manifest + "\n")


# --- estimate -------------------------------------------------------------------


def cmd_estimate(cfg: ExperimentConfig) -> EstimationReport:
    out = Path(cfg.out_dir)
    model = load_model(cfg)
    manifest = json.loads(_read(out / MANIFEST_FILE))
    if manifest["model_hash"] != model_hash(cfg):
        raise ValueError("run artifacts were produced for a different model; rerun `run`")
    if manifest["shots"] is None:
        observed = born_from_csv(_read(out / BORN_FILE), cfg.n)
        exact = None
    else:
        records = simulate.records_from_csv(_read(out / SHOTS_FILE), cfg.n)
        observed = [simulate.empirical_born(r) for r in records]
        exact = simulate.exact_born_all(model)
    report = experiment.estimate_from(model, observed, cfg.cutoff, cfg.method, exact=exact)
    report.meta.update({"shots": manifest["shots"], "cutoff": cfg.cutoff, "method": cfg.method})
    (out / REPORT_CSV).write_text(report.to_csv())
    (out / REPORT_JSON).write_text(report.summary_json() + "\n")
    return report


# --- report ---------------------------------------------------------------------


def estimate_type(degree: int) -> str:
    """Odd degrees are read only from x circuits; even degrees are labelled z."""
    return "x" if degree % 2 else "z"


def cmd_report(cfg: ExperimentConfig) -> dict:
    """Binned relative errors per (estimate type, degree, shots) and a text summary."""
    out = Path(cfg.out_dir)
    rows = list(csv.DictReader(io.StringIO(_read(out / REPORT_CSV))))
    shots = json.loads(_read(out / REPORT_JSON)).get("shots")
    shots_label = "exact" if shots is None else str(shots)
    edges = np.linspace(0.0, cfg.hist_max, cfg.hist_bins + 1)
    groups: dict[tuple[str, int], list[float]] = {}
    for r in rows:
        k = int(r["degree"])
        groups.setdefault((estimate_type(k), k), []).append(float(r["rel_error"]))
    lines = ["type,degree,shots,bin_lo,bin_hi,count,overflow"]
    for (kind, k), errs in sorted(groups.items(), key=lambda t: (t[0][0], t[0][1])):
        errs = np.array(errs)
        counts, _ = np.histogram(np.minimum(errs, cfg.hist_max), bins=edges)
        overflow = int((errs > cfg.hist_max).sum())
        for lo, hi, c in zip(edges[:-1], edges[1:], counts):
            lines.append(f"{kind},{k},{shots_label},{float(lo)!r},{float(hi)!r},{int(c)},{overflow}")
    (out / HIST_CSV).write_text("\n".join(lines) + "\n")
    meta = {"edges": [float(e) for e in edges], "shots": shots, "overflow_clipped_into_last_bin": True}
    (out / HIST_META).write_text(json.dumps(meta, indent=1) + "\n")

    rel = np.array([float(r["rel_error"]) for r in rows])
    summary = {
        "estimates": int(rel.size),
        "shots": shots,
        "median_rel_error": float(np.median(rel)) if rel.size else None,
        "fraction_below_5pct": float((rel < 0.05).mean()) if rel.size else None,
    }
    text = (
        f"estimates: {summary['estimates']}\n"
        f"shots per circuit: {shots_label}\n"
        f"median relative error: {summary['median_rel_error']}\n"
        f"fraction of estimates under 5% relative error: {summary['fraction_below_5pct']}\n"
    )
    (out / SUMMARY_FILE).write_text(text)
    return summary


def run_pipeline(cfg: ExperimentConfig, exact: bool = False) -> EstimationReport:
    cmd_generate(cfg)
    cmd_run(cfg, exact)
    report = cmd_estimate(cfg)
    cmd_report(cfg)
    return report


# --- entry point ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="faces", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=["generate", "run", "estimate", "report", "all"])
    p.add_argument("--config", help="JSON config file (defaults otherwise)")
    p.add_argument("--seed", type=int, help="override the master seed")
    p.add_argument("--exact-probabilities", action="store_true", help="infinite-shot mode")
    p.add_argument("--out", help="override the output directory")
    p.add_argument("--workers", type=int, help="threads for shot sampling")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def config_from_args(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    overrides = {"seed": args.seed, "out_dir": args.out, "workers": args.workers}
    return cfg.replace(**{k: v for k, v in overrides.items() if v is not None})


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    cfg = config_from_args(args)
    try:
        if args.command in ("generate", "all"):
            cmd_generate(cfg)
        if args.command in ("run", "all"):
            cmd_run(cfg, args.exact_probabilities)
        if args.command in ("estimate", "all"):
            report = cmd_estimate(cfg)
            if report.bound_violated:
                bad = [d.degree for d in report.degrees if d.bound_violated]
                print(f"error bound violated at degrees {bad}", file=sys.stderr)
                return EXIT_BOUND
        if args.command in ("report", "all"):
            summary = cmd_report(cfg)
            print(json.dumps(summary, sort_keys=True))
    except CutoffRankError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CUTOFF_RANK
    except IdentifiabilityError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IDENTIFIABILITY
    except (FileNotFoundError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
