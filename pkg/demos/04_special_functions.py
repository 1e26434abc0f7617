"""The two special functions the manufactured data needs.

The source term contains 2F1(s + 1, s - p; 1; |x|^2).  For p = 6 the series
is well behaved; for p = 0 it grows like (1 - |x|^2)^(-2s) near the circle,
so the summation needs many terms there.  The series stops when a term
falls below 1e-16 of the partial sum.
"""
import math

import numpy as np

from fracldg.special import gamma_fn, hyp2f1, hyp2f1_series

print(f"Gamma(0.5)  = {gamma_fn(0.5):.16f}  sqrt(pi) = {math.sqrt(math.pi):.16f}")
print(f"Gamma(-0.5) = {gamma_fn(-0.5):.16f}")
print(f"2F1(1,1;2;1/2) = {hyp2f1(1, 1, 2, 0.5):.16f}  2 ln 2 = {2 * math.log(2):.16f}")

s = 0.5
for z in (0.5, 0.9, 0.99, 0.999):
    smooth = hyp2f1(s + 1, s - 6, 1, z)
    rough, ok = hyp2f1_series(s + 1, s, 1, z)
    print(f"z = {z:<6}  p=6: {smooth: .6e}   p=0: {rough: .6e} "
          f"x (1-z)^(2s) = {rough * (1 - z) ** (2 * s):.4f}  converged={ok}")

z = np.linspace(0, 0.95, 5)
print("vectorised:", hyp2f1(1.5, -5.5, 1.0, z))
