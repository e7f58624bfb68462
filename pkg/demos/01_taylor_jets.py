"""
Exact mixed partials with truncated Taylor jets
===============================================

A jet carries every partial derivative of a scalar program up to a fixed
order: here order 1 in the base coordinates x and order 5 in the fiber
coordinates y.  We differentiate a Randers-like program and compare a few
entries against a high-precision finite-difference stencil.
"""
import mpmath

from finsler_product import jets
from finsler_product.jets import DerivSpec, extract, fd_oracle, jet_variable

spec = DerivSpec(dim_x=2, dim_y=2, order_x=1, order_y=5)
point = (0.7, -0.4, 0.9, 0.6)  # x1, x2, y1, y2


def program(v, lib):
    return lib.sqrt(v[2] ** 2 + (1 + v[0] ** 2) * v[3] ** 2) + 0.3 * lib.sin(v[0]) * v[3]


# seed one jet per coordinate, then run the program once in jet arithmetic
j = program([jet_variable(spec, i, point[i]) for i in range(4)], jets)
print(f"value            {j.value:.15f}")
print(f"d/dy1            {j.partial(y=(0,)):.15f}")
print(f"d2/dx1 dy2       {j.partial(x=(0,), y=(1,)):.15f}")

# the oracle evaluates the same program on mpmath numbers with a central stencil
for idx in [(0, 0, 1, 0), (1, 0, 0, 1), (0, 0, 3, 2), (1, 0, 2, 3)]:
    exact = extract(j, idx)
    approx = fd_oracle(lambda v: program(v, mpmath), point, idx, precision=50)
    print(f"partial {idx}: jet {exact: .12e}  stencil {approx: .12e}  rel {abs(exact - approx) / abs(approx):.1e}")

# domain rules follow the smooth calculus: log at zero is refused
try:
    jets.log(jet_variable(spec, 2, 0.0))
except ValueError as err:
    print("domain error:", err)

# a quotient-rule sanity check: d/ds of st/(s+t) at (3, 4) is 16/49
s = jet_variable(DerivSpec(1, 1, 1, 2), 0, 3.0)
t = jet_variable(DerivSpec(1, 1, 1, 2), 1, 4.0)
print("quotient rule:", (s * t / (s + t)).partial(x=(0,)), 16 / 49)
