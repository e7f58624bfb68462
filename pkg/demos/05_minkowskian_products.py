"""
Minkowskian products and their block structure
==============================================

Two Finsler metrics F1 on M1 and F2 on M2 combine into F = sqrt(f(F1^2, F2^2))
on M1 x M2 for a 1-homogeneous product function f.  The inverse fundamental
tensor has a closed form, the spray splits into the factor sprays, and the
curvature tensors are block diagonal.  ``verify_product`` checks all of this
against independent computations on each factor.
"""
import numpy as np

from finsler_product import classify, metrics
from finsler_product.classify import verify_product
from finsler_product.product import eps_sqrt, f_partials, minkowski_product, pnorm, sum_function
from finsler_product.sampling import SamplePoint, SamplerConfig
from finsler_product.tensors import compute_frame, inverse_product_closed_form

# the discriminant of the product function must stay away from zero
for f in (sum_function(), pnorm(2), eps_sqrt(0.5)):
    fp = f_partials(f, 3.0, 4.0)
    print(f"{f.name:<14} f = {f.text:<24} Delta(3, 4) = {fp.delta:.4f}")

e2 = metrics.euclidean(2)
pm = minkowski_product(e2, e2, eps_sqrt(0.5))
p = SamplePoint((0, 0, 0, 0), (1, 0, 1, 0))
print("\nclosed-form inverse at y = (1, 0, 1, 0):\n", np.round(inverse_product_closed_form(pm, p), 6))

sampler = SamplerConfig(count=50, seed=0)
randers = metrics.randers(["0", "0.3*sin(x1)"], name="randers_sin")
product = minkowski_product(metrics.round_sphere(), randers, pnorm(2), sampler)
fr = compute_frame(product, SamplePoint((1.0, 0.2, 0.7, 0.2), (0.3, 0.4, 0.6, 0.8)))
print("\nmixed blocks of B (should vanish):", np.max(np.abs(fr.berwald_curv[:2, 2:])))

rep = verify_product(product, sampler)
print(f"\n{product.name}: {'all checks pass' if rep.passed else 'FAILED'}")
for c in rep.checks:
    print(f"  {c['id']:>3} {c['name']:<24} {c['max_residual']:.2e}  (tol {c['tolerance']:.0e})")
for who in ("factor1", "factor2", "product"):
    v = rep.classification[who]
    print(f"  {who:<8} berwald={v['berwald']['holds']}  weakly_berwald={v['weakly_berwald']['holds']}")

# both factors Berwald: the product is Berwald too
berwald_product = minkowski_product(metrics.round_sphere(), metrics.mroot(2, 4), eps_sqrt(0.5), sampler)
print("\nsphere x mroot4 berwald:", classify(berwald_product, sampler).holds("berwald"))
