"""
A Randers metric that is not Berwald
====================================

With a one-form b = 0.3 sin(x1) dx2 that is not parallel, the spray picks up
terms that are not quadratic in y.  The Berwald curvature B and its trace E
are then nonzero, and classification on the indicatrix reports it.
"""
import numpy as np

from finsler_product import classify, metrics
from finsler_product.sampling import SamplePoint, SamplerConfig
from finsler_product.tensors import compute_frame

randers = metrics.randers(["0", "0.3*sin(x1)"], name="randers_sin")
fr = compute_frame(randers, SamplePoint((0.7, 0.2), (0.6, 0.8)))
print("spray               ", fr.spray)
print("max |B|             ", np.max(np.abs(fr.berwald_curv)))
print("B contracted with y ", np.max(np.abs(fr.berwald_curv @ np.array(fr.at.y))))
print("max |Cartan_v|      ", np.max(np.abs(fr.cartan_v)))

for m in [metrics.euclidean(2), metrics.round_sphere(), metrics.mroot(2, 4), randers]:
    rep = classify(m, SamplerConfig(count=40, seed=0))
    verdicts = "  ".join(f"{k}={'yes' if v['holds'] else 'no '} ({v['max_residual']:.1e})"
                         for k, v in rep.verdicts.items())
    print(f"{m.name:<14} {verdicts}")
