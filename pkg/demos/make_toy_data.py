"""Write the two-class Gaussian toy splits as CSV files.

    python demos/make_toy_data.py data/
"""

import sys
from pathlib import Path

from diffaug.data import save_dataset
from diffaug.toy import toy_splits

out = Path(sys.argv[1] if len(sys.argv) > 1 else "data")
out.mkdir(parents=True, exist_ok=True)
for name, ds in zip(("train", "valid", "test"), toy_splits(seed=0)):
    save_dataset(ds, out / f"{name}.csv")
    print(f"{name:5s}: {len(ds)} rows, class counts {ds.class_counts.tolist()} -> {out / name}.csv")
