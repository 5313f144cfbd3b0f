"""Regenerate cars_fixture.csv: 27 cars, 4 interval variables, 5 planted rows.

The planted rows have every center moved up by 8 robust standard deviations
(1.4826 * MAD of the clean centers).
"""
import argparse

import numpy as np

VARIABLES = ["price", "engine", "top_speed", "accel"]
MEANS = np.array([28.0, 1.9, 190.0, 10.5])
SDS = np.array([5.0, 0.35, 14.0, 1.4])
CORR = np.array([
    [1.0, 0.6, 0.5, -0.4],
    [0.6, 1.0, 0.6, -0.5],
    [0.5, 0.6, 1.0, -0.6],
    [-0.4, -0.5, -0.6, 1.0],
])
REL_RANGE = 0.12


def build(seed, n=27, planted=5, shift=8.0):
    rng = np.random.default_rng(seed)
    cov = np.outer(SDS, SDS) * CORR
    centers = rng.multivariate_normal(MEANS, cov, size=n)
    ranges = np.abs(centers) * REL_RANGE * rng.uniform(0.6, 1.4, size=centers.shape)
    out_rows = np.sort(rng.choice(n, size=planted, replace=False))
    clean = np.setdiff1d(np.arange(n), out_rows)
    med = np.median(centers[clean], axis=0)
    mad = 1.4826 * np.median(np.abs(centers[clean] - med), axis=0)
    centers[out_rows] += shift * mad
    labels = np.zeros(n, dtype=int)
    labels[out_rows] = 1
    return centers, ranges, labels


def write(path, centers, ranges, labels):
    header = ["id"] + [f"{v}_{s}" for v in VARIABLES for s in ("lo", "hi")] + ["label"]
    with open(path, "w") as f:
        f.write(",".join(header) + "\n")
        for i, (c, r, y) in enumerate(zip(centers, ranges, labels)):
            cells = [f"car{i + 1:02d}"]
            for cj, rj in zip(c, r):
                cells += [f"{cj - rj / 2:.4f}", f"{cj + rj / 2:.4f}"]
            cells.append(str(y))
            f.write(",".join(cells) + "\n")


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="cars_fixture.csv")
    a = ap.parse_args()
    write(a.out, *build(a.seed))
