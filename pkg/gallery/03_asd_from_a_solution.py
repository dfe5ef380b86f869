"""An anti-self-dual four-manifold from a single range function.

The zero set of F = e^{-2a} + p e^{-a-b} is a hypersurface in the space of
conics.  At each point the quartic rho(dF) has two null cubics, and they give a
null tetrad of a conformal structure on the hypersurface.  Its self-dual Weyl
tensor vanishes, and the three Kahler forms built from the conic are closed.
"""

from conicgeom import asd4, radon

F = radon.family_F1([0, 1, 0, 0, 0, 1, 0, 0])
points = asd4.sample_hypersurface(F, 4, seed=0, dropped=2)

for hp in points:
    pkg = asd4.build_conformal(F, hp)
    ratio = asd4.weyl_plus_ratio(pkg)["ratio"]
    closed = max(asd4.closedness_residuals(F, hp.m.x))
    print(f"y = {hp.y.round(3)}  |C+|/|C| = {ratio:.1e}  closedness = {closed:.1e}")

report = asd4.certify_asd(F, points)
print("\ncertificate:", "pass" if report["pass"] else f"fail {report['failed']}")

control = lambda x: radon.trace_conic(x) - 4.0  # noqa: E731
bad = asd4.certify_asd(control, asd4.sample_hypersurface(control, 3, seed=0))
print("control Tr A - 4 fails:", bad["failed"])
