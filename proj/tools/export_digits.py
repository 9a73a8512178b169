#!/usr/bin/env python3
"""Write the 8x8 handwritten digits set as CSV: 64 feature columns, label last."""
import os
import sys

import numpy as np
from sklearn.datasets import load_digits


def main():
    out = sys.argv[1] if len(sys.argv) > 1 else "digits.csv"
    d = os.path.dirname(out)
    if d:
        os.makedirs(d, exist_ok=True)
    ds = load_digits()
    table = np.column_stack([ds.data, ds.target])
    np.savetxt(out, table, delimiter=",", fmt="%.17g")
    print(f"wrote {out}: {table.shape[0]} rows, {ds.data.shape[1]} features")


if __name__ == "__main__":
    main()
