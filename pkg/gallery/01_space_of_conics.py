"""The space of conics as a five-dimensional Einstein manifold.

A point (a, b, p, q, r) is a unimodular positive conic matrix.  We compute its
curvature from jets of the metric and read off the constant scalar curvature,
then check the parallel cubic form that reduces the structure group to SO(3).
"""

import numpy as np

from conicgeom import conic_space, tensorlab

points = conic_space.sample_box(5, seed=1)

print("scalar curvature at five sampled conics")
for x in points:
    c = tensorlab.curvature(conic_space.metric, x)
    einstein = np.abs(c.ricci - c.scalar / 5 * c.metric).max()
    print(f"  x = {np.round(x, 3)}  R = {c.scalar:+.12f}  |Ric - R g/5| = {einstein:.1e}")
print(f"  expected R = {-15 / 16}")

print("\nSO(3) structure residuals at the first point")
for name, value in conic_space.so3_residuals(points[0]).items():
    if not name.startswith(("killing", "bracket")):
        print(f"  {name:<22} {value:.2e}")
