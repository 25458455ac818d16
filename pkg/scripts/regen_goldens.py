"""Rewrite the seeded golden fixtures under tests/goldens.

Only run this after an intentional change to seeding or file formats; the
tests compare against these files byte for byte.
"""
import json
import tempfile
from pathlib import Path

import numpy as np

from faces import design, fermion, oracle, simulate
from faces.cli import run_pipeline
from faces.config import ExperimentConfig
from faces.kravchuk import BornDistribution
from faces.noise import random_two_qubit_pauli_noise

GOLDEN = Path(__file__).resolve().parent.parent / "tests" / "goldens"

TINY = ExperimentConfig(n=2, n_bins=4, count_z=40, count_x=40, shots=200, cutoff=0.05, seed=3)
DENSE_GATES = {
    "n1_Z1_0.3": (1, fermion.zrot(1, 0.3, 46)),
    "n2_Z1_0.3": (2, fermion.zrot(1, 0.3, 46)),
    "n2_Z2_1.2": (2, fermion.zrot(2, 1.2, 46)),
    "n2_G1": (2, fermion.fhop(1)),
}


def write_complex_csv(path: Path, U: np.ndarray) -> None:
    lines = ["row,col,re,im"]
    for (r, c), v in np.ndenumerate(U):
        lines.append(f"{r},{c},{float(v.real)!r},{float(v.imag)!r}")
    path.write_text("\n".join(lines) + "\n")


def main():
    GOLDEN.mkdir(parents=True, exist_ok=True)
    ch = random_two_qubit_pauli_noise((1, 2), 3, np.random.default_rng(7))
    (GOLDEN / "pauli_channel_seed7.json").write_text(json.dumps(ch.probs, indent=1) + "\n")

    rng = np.random.default_rng(11)
    circuits = [
        design.build_z_circuit(rng, 3, 3, 46, index=0),
        design.build_x_circuit(rng, 2, 3, 46, index=1),
    ]
    (GOLDEN / "circuits_seed11.jsonl").write_text(design.circuits_to_jsonl(circuits))

    P = BornDistribution("x", 2, plus=[0.7, 0.1], minus=[0.15, 0.05])
    rec = simulate.sample_shots(P, 1000, np.random.default_rng(5))
    (GOLDEN / "shots_seed5.csv").write_text(simulate.records_to_csv([rec]))

    for name, (n, g) in DENSE_GATES.items():
        write_complex_csv(GOLDEN / f"gate_{name}.csv", oracle.dense_gate(g, n))

    with tempfile.TemporaryDirectory() as tmp:
        run_pipeline(TINY.replace(out_dir=tmp))
        for name in ("shots.csv", "report.csv", "design.csv"):
            (GOLDEN / f"tiny_{name}").write_text((Path(tmp) / name).read_text())
    print(f"wrote goldens to {GOLDEN}")


if __name__ == "__main__":
    main()
