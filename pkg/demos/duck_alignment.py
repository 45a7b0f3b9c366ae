"""Aligning a rotated duck when two of its points are corrupted.

Run with ``python3 demos/duck_alignment.py``. Prints the recovered rotation
angle under each norm for the three outlier patterns.
"""
import numpy as np

from procrustes_mads import solve
from procrustes_mads.duck import ALPHA_STAR, OUTLIER_COLUMNS, duck_dataset, make_outlier_set, rotated_duck
from procrustes_mads.duck import alignment_errors
from procrustes_mads.manifold import component

A = duck_dataset()        # 2 x 10 outline of a duck
B = rotated_duck()        # the same outline turned by 5 pi / 8
print(f"true angle {ALPHA_STAR:.6f}")

# Each variant moves points 1 and 7 of B. The Frobenius fit is pulled
# toward the moved points; the robust l2,1 fit ignores them.
for variant in "CDE":
    C = make_outlier_set(variant, B)
    print(f"\nvariant {variant}")
    for norm in ("frobenius", "spectral", "robust"):
        sol = solve(norm, A, C)
        if component(sol.W) < 0:
            print(f"  {norm:9s} best fit is a reflection, cost {sol.cost:.4f}")
            continue
        err = alignment_errors(sol.W, ALPHA_STAR, A, C, OUTLIER_COLUMNS)
        print(f"  {norm:9s} angle error {err.eps_alpha:.3e}  residual on clean points {err.eps_frobenius:.3e}")

# the robust solution puts the eight clean points back exactly
W = solve("robust", A, make_outlier_set("C", B)).W
keep = [j for j in range(10) if j not in OUTLIER_COLUMNS]
print("\nmax clean-point mismatch (robust, C):", np.abs(A[:, keep] - W @ B[:, keep]).max())
