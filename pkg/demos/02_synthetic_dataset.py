"""Demo: generate a small synthetic dataset and look at its shape statistics.

Generates 60 bundles (cylinders, arcs, helices) into a temporary directory,
computes the ten ground-truth measures for each, and prints per-family means
— arcs and helices curl more, cylinders are the most elongated.

Run: python3 demos/02_synthetic_dataset.py
"""

import tempfile

import numpy as np

from bundleshape.io import read_native
from bundleshape.shapes import MEASURE_NAMES, compute_measures
from bundleshape.synth import DatasetConfig, generate_dataset


def main():
    with tempfile.TemporaryDirectory() as tmp:
        cfg = DatasetConfig(out_dir=tmp, n_bundles=60, master_seed=11)
        rows = generate_dataset(cfg)
        print(f"generated {len(rows)} bundles "
              f"({sum(r.split == 'train' for r in rows)} train / "
              f"{sum(r.split == 'val' for r in rows)} val / "
              f"{sum(r.split == 'test' for r in rows)} test)")

        by_family = {}
        for r in rows:
            bundle = read_native(open(r.path, "rb").read())
            m = compute_measures(bundle, voxel_size=1.0).as_array()
            by_family.setdefault(r.family, []).append(m)

        header = f"{'measure':26s}" + "".join(f"{fam:>12s}" for fam in sorted(by_family))
        print("\nper-family mean measures\n" + header)
        means = {fam: np.mean(v, axis=0) for fam, v in by_family.items()}
        for j, name in enumerate(MEASURE_NAMES):
            row = "".join(f"{means[fam][j]:12.3f}" for fam in sorted(means))
            print(f"{name:26s}{row}")

        print("\nNote how curl separates the families: straight cylinders sit "
              "near 1, arcs and helices well above.")


if __name__ == "__main__":
    main()
