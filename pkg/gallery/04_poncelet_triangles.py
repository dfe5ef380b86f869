"""Conics that carry Poncelet triangles around the base conic.

A line in the space of binary cubics maps to a conic under the quadratic map
p -> <p, p>_2.  Such conics have vanishing invariant I and close every
triangle inscribed in them and circumscribed about Z.Z = 0.  A generic conic
does not.
"""

import numpy as np

from conicgeom import projective as pj
from conicgeom.quantics import BinaryForm

rng = np.random.default_rng(5)


def cplx(n):
    return rng.normal(size=n) + 1j * rng.normal(size=n)


line = pj.LineCP3(BinaryForm(cplx(4)), BinaryForm(cplx(4)))
image = pj.conic_of_line(line).A
generic = cplx(9).reshape(3, 3)
generic = generic + generic.T

for label, A in (("image of a line", image), ("generic conic", generic)):
    inv = pj.normalized_invariant(pj.ConicPair(A))
    gaps = [pj.poncelet_close(A, rng=rng) for _ in range(3)]
    print(f"{label:<16} |I|/|A|^2 = {inv:.1e}  closure gaps = {', '.join(f'{g:.1e}' for g in gaps)}")

print("\nGergonne point of the triangle with vertices -1, 0, 1:", [complex(z) for z in pj.gergonne_point(-1, 0, 1)])
