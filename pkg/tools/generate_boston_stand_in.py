"""Regenerate src/lgso/data/boston_synthetic.csv.

The classic Boston housing table was pulled from scikit-learn and is not
redistributable from here, so the package ships a synthetic stand-in with
the same shape (506 rows, 13 features + MEDV target), feature ranges close
to the published ones, and a target whose scale matches the raw MEDV mean
of about 22.53. Any real 506x14 CSV can be substituted at load time.
"""

import csv
import pathlib

import numpy as np

OUT = pathlib.Path(__file__).resolve().parents[1] / "src" / "lgso" / "data" / "boston_synthetic.csv"

COLUMNS = [
    "CRIM", "ZN", "INDUS", "CHAS", "NOX", "RM", "AGE",
    "DIS", "RAD", "TAX", "PTRATIO", "B", "LSTAT", "MEDV",
]


def main():
    rng = np.random.default_rng(20260823)
    n = 506

    crim = np.clip(rng.lognormal(-0.8, 1.9, n), 0.006, 89.0)
    zn = np.where(rng.random(n) < 0.73, 0.0, rng.choice([12.5, 20.0, 25.0, 40.0, 75.0, 100.0], n))
    indus = np.clip(rng.normal(11.1, 6.8, n), 0.46, 27.74)
    chas = (rng.random(n) < 0.069).astype(float)
    nox = np.clip(rng.normal(0.555, 0.115, n), 0.385, 0.871)
    rm = np.clip(rng.normal(6.28, 0.70, n), 3.56, 8.78)
    age = np.clip(rng.normal(68.6, 28.0, n), 2.9, 100.0)
    dis = np.clip(rng.lognormal(1.19, 0.54, n), 1.13, 12.13)
    rad = rng.choice([1, 2, 3, 4, 5, 6, 7, 8, 24], n, p=[0.04, 0.05, 0.08, 0.22, 0.23, 0.05, 0.03, 0.05, 0.25]).astype(float)
    tax = np.round(np.clip(rng.normal(408.0, 168.0, n), 187.0, 711.0))
    ptratio = np.clip(rng.normal(18.46, 2.16, n), 12.6, 22.0)
    b = np.clip(396.9 - rng.lognormal(2.2, 1.9, n), 0.32, 396.9)
    lstat = np.clip(rng.lognormal(2.42, 0.56, n), 1.73, 37.97)

    medv = (
        22.53
        + 6.0 * (rm - 6.28)
        - 0.55 * (lstat - 12.65)
        - 16.0 * (nox - 0.555)
        - 0.06 * (crim - 3.6)
        - 0.55 * (ptratio - 18.46)
        + 1.0 * chas
        + rng.normal(0.0, 3.2, n)
    )
    medv = np.clip(medv, 5.0, 50.0)
    medv = np.clip(medv - medv.mean() + 22.5328, 5.0, 50.0)

    table = np.column_stack([crim, zn, indus, chas, nox, rm, age, dis, rad, tax, ptratio, b, lstat, medv])
    OUT.parent.mkdir(parents=True, exist_ok=True)
    with open(OUT, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(COLUMNS)
        for row in table:
            writer.writerow([f"{v:.4f}" for v in row])
    print(f"wrote {OUT} ({table.shape[0]} rows), MEDV mean {medv.mean():.4f}")


if __name__ == "__main__":
    main()
