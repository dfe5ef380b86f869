"""Functions in the range of the transform from sections on the twistor conic.

Three ways of producing range functions are compared against the two linear
equations that characterise the range: an explicit eight-parameter family, the
harmonic family, and contour residues of rational sections.  The trace of the
conic matrix is invariant but lies outside the range, and fails both.
"""

from conicgeom import conic_space, jets, radon

points = conic_space.sample_box(10, seed=3, half_width=0.8)


def worst(F):
    r = radon.certify_range(F, points)
    return r["laplace"], r["box"]


examples = {
    "eight-parameter family": radon.family_F1([0.3, -1, 0.2, 0.5, 0.1, 1, -0.4, 0.7]),
    "harmonic, K = e^u cos q": radon.family_harmonic(lambda u, q: jets.exp(u) * jets.cos(q)),
    "residue of Z2/(Z1 Z3)": radon.residue_transform(radon.section("Z2/(Z1*Z3)"), radon.PoleSpec(1.0)),
    "Tr A (control)": radon.trace_conic,
}
print(f"{'function':<26} {'Laplace eq.':>12} {'cubic eq.':>12}")
for name, F in examples.items():
    lap, box = worst(F)
    print(f"{name:<26} {lap:12.2e} {box:12.2e}")

print("\nLaplace eigenvalue forced by the cubic equation:",
      radon.predicted_mu(1 / 24, -15 / 16))
