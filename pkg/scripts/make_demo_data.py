"""Regenerate the bundled synthetic demo data.

Writes a depletion-record scan (Lorentzian line with Gaussian record
noise) and a counter log (white frequency noise plus slow drift) into
src/hdspec/data/.  Fixed seed: the bundled files are this script's
frozen output, byte for byte.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

DATA_DIR = Path(__file__).resolve().parent.parent / "src" / "hdspec" / "data"

LINE_CENTER_KHZ = 0.037
LINE_FWHM_KHZ = 0.195
LINE_AMPLITUDE = 0.35
BACKGROUND_DEPLETION = 0.02
RECORD_NOISE = 0.005

CARRIER_HZ = 58605052164255.0
COUNTER_NOISE_HZ = 3.0
DRIFT_HZ_PER_S = 0.1 / 60.0


def lorentzian(detuning: np.ndarray) -> np.ndarray:
    h = (LINE_FWHM_KHZ / 2.0) ** 2
    return LINE_AMPLITUDE * h / ((detuning - LINE_CENTER_KHZ) ** 2 + h)


def write_depletion(rng: np.random.Generator) -> None:
    detunings = np.round(np.arange(-0.5, 0.5001, 0.05), 3)
    rows = []
    run = 0
    for delta in detunings:
        for _ in range(4):
            on = BACKGROUND_DEPLETION + lorentzian(np.array([delta]))[0] + rng.normal(0, RECORD_NOISE)
            rows.append((delta, f"r{run:03d}", 1, round(float(np.clip(on, 0, 1)), 4)))
            run += 1
        for _ in range(4):
            off = BACKGROUND_DEPLETION + rng.normal(0, RECORD_NOISE)
            rows.append((delta, f"r{run:03d}", 0, round(float(np.clip(off, 0, 1)), 4)))
            run += 1
    with open(DATA_DIR / "line12_depletion.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["detuning_khz", "run_id", "laser_on", "depletion"])
        writer.writerows(rows)


def write_counter(rng: np.random.Generator) -> None:
    n = 400
    t = np.arange(n, dtype=float)
    f = CARRIER_HZ + DRIFT_HZ_PER_S * t + rng.normal(0, COUNTER_NOISE_HZ, n)
    with open(DATA_DIR / "demo_counter.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t_s", "f_hz"])
        for ti, fi in zip(t, f):
            writer.writerow([repr(float(ti)), repr(round(float(fi), 3))])


def main() -> None:
    rng = np.random.default_rng(20210405)
    write_depletion(rng)
    write_counter(rng)
    print(f"wrote demo data into {DATA_DIR}")


if __name__ == "__main__":
    main()
