"""Cost of every planar rotation for the duck with outliers.

Run with ``python3 demos/cost_landscape.py``. For the outlier set D each
cost has a single basin over rotations, but the basins sit at different
angles: only the robust cost bottoms out at the rotation that undoes B.
The spectral and robust costs are not smooth, so the solvers use a
derivative-free search instead of gradients.
"""
import numpy as np

from procrustes_mads import angle_sweep
from procrustes_mads.duck import ALPHA_STAR, duck_dataset, make_outlier_set, rotated_duck

A = duck_dataset()
D = make_outlier_set("D", rotated_duck())
grid = np.linspace(-np.pi, np.pi, 3600, endpoint=False)

for norm in ("frobenius", "spectral", "robust"):
    sw = angle_sweep(norm, A, D, grid, markers=True)
    y = sw.cost
    # local minima of the sampled curve, wrapping around the circle
    is_min = (y < np.roll(y, 1)) & (y < np.roll(y, -1))
    print(f"{norm:9s} {is_min.sum()} local minima at", np.round(grid[is_min], 3))
    for name, (a, c) in sw.markers.items():
        print(f"          marker {name:6s} angle {a:+.4f} cost {c:.4f}")

print(f"\nthe rotation undoing B is {-ALPHA_STAR:+.4f}")
