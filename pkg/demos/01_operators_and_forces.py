"""
Fourier multipliers and annulus forces
======================================

Every operator in the package is a Fourier multiplier on a periodic box.
This script checks a few of them on a single mode, builds a random force
supported on an annulus, and watches the heat semigroup shrink it.
"""

import math

import numpy as np

from sqgsteady.forcing import ForceSpec, make_annulus_force, semigroup_decay_envelope
from sqgsteady.spectral import (LambdaPower, PhysicalField, apply_multiplier, as_physical,
                                forward_transform, make_grid, norm, riesz_perp, x_norm)

grid = make_grid(64)
x1, x2 = grid.coords

###############################################################################
# A single mode cos(3 x1 + 4 x2) has |k| = 5, so Lambda^s multiplies it by 5^s
# and the velocity R-perp theta is a sine wave of the same length.
mode = forward_transform(PhysicalField(np.cos(3 * x1 + 4 * x2), grid))
half = as_physical(apply_multiplier(mode, LambdaPower(0.5))).values
print("Lambda^{1/2} factor:", half.max(), "expected", math.sqrt(5))
u1, u2 = riesz_perp(mode)
print("||u||_2 / ||theta||_2 =", norm((u1, u2), "l2") / norm(mode, "l2"))

###############################################################################
# A force on 5 <= |k| <= 10, scaled to X-norm 0.05.  Its Philox realization
# does not depend on the grid size.
f = make_annulus_force(ForceSpec(5.0, 10.0, seed=7, target_x_norm=0.05), grid)
print("||f||_X =", x_norm(f, 1.0))
small = make_annulus_force(ForceSpec(5.0, 10.0, seed=7, target_x_norm=0.05), make_grid(32))
print("same force on n=32, ||f||_2 ratio:", norm(small, "l2") / norm(f, "l2"))

###############################################################################
# The semigroup shrinks every L^p norm at least as fast as exp(-kappa rho0 t).
for p, nu in [(2, 0.0), (4, 0.5), (math.inf, 0.0)]:
    env = semigroup_decay_envelope(f, 1.0, 1.0, 5.0, nu, p, [0.0, 0.1, 0.5, 1.0])
    print(f"p={p}, nu={nu}: ratios to the envelope", np.round(env.ratios, 6))
