"""
Metrics as expressions, checked against the Finsler axioms
==========================================================

Every metric is an expression for G = F^2 in x1.., y1...  Builtin families
expand into the same small language, and ``validate`` samples the tangent
bundle to check positivity, homogeneity, Euler's identity and convexity.
"""
from finsler_product import metrics, mexpr
from finsler_product.sampling import SamplerConfig

for m in [
    metrics.euclidean(2),
    metrics.round_sphere(),
    metrics.randers(["0", "0.3*sin(x1)"]),
    metrics.mroot(2, 4),
    metrics.custom("y1^2 + y1*y2 + y2^2", 2),
]:
    rep = metrics.validate(m, SamplerConfig(count=50, seed=0))
    print(f"{m.name:<22} G = {m.text:<45} passed={rep.passed}  min eigenvalue={rep.min_eigenvalue:.3f}")

# a Randers one-form that is too long breaks convexity
bad = metrics.validate(metrics.randers(["1.5", "0"]), SamplerConfig(count=50, seed=0))
print("\nranders b=(1.5, 0):", "passed" if bad.passed else "failed")
for name, c in bad.checks.items():
    print(f"  {name:<18} failures={c['failures']:<3} max residual={c['max_residual']:.3g}")

# Randers metrics are not reversible; the check is informational by default
rev = metrics.validate(metrics.randers(["0.5", "0"]), SamplerConfig(count=20), reversibility="required")
print("\nranders b=(0.5, 0) with reversibility required:", "passed" if rev.passed else "failed")

# the language itself: parse, print, evaluate
e = mexpr.parse("s + t + 2*0.5*sqrt(s*t)", mexpr.PRODUCT_VARIABLES)
print("\nprinted:", mexpr.to_text(e), " f(1, 1) =", mexpr.eval_float(e, {"s": 1.0, "t": 1.0}))
try:
    mexpr.parse("y1 + + y2", mexpr.metric_variables(2))
except SyntaxError as err:
    print("syntax error:", err)
