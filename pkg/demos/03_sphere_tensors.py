"""
Spray, connections and curvature on the round sphere
====================================================

For a Riemannian metric the spray is quadratic in y, the Berwald and Cartan
connections both reduce to the Christoffel symbols, and every curvature
built from the third fiber derivative of the spray vanishes.
"""
import math

import numpy as np

from finsler_product import metrics
from finsler_product.sampling import SamplePoint
from finsler_product.tensors import compute_frame

sphere = metrics.round_sphere()
p = SamplePoint((math.pi / 4, 0.0), (1.0, 1.0))
fr = compute_frame(sphere, p)

np.set_printoptions(precision=6, suppress=True)
print("G_ab\n", fr.G_lower)
print("spray G^a          ", fr.spray)
print("nonlinear Gamma^a_b\n", fr.nconn)

# Christoffel symbols of diag(1, sin^2 x1), written out by hand
s, c = math.sin(p.x[0]), math.cos(p.x[0])
christoffel = np.zeros((2, 2, 2))
christoffel[0, 1, 1] = -s * c
christoffel[1, 0, 1] = christoffel[1, 1, 0] = c / s
print("Berwald  - Christoffel:", np.max(np.abs(fr.berwald_conn - christoffel)))
print("Cartan_h - Christoffel:", np.max(np.abs(fr.cartan_h - christoffel)))
print("max |Cartan_v|       :", np.max(np.abs(fr.cartan_v)))
print("max |B|, |E|, |L|, |J|:", [float(np.max(np.abs(getattr(fr, a))))
                                 for a in ("berwald_curv", "mean_berwald", "landsberg", "mean_landsberg")])
