"""
Moment flat connections that are not projectively flat
-------------------------------------------------------

Three constructions with ``K = 0`` but ``rho != 0``: the cube of an exact
form on the flat plane, the Busemann deformation of the hyperbolic plane
and the deformation by a harmonic one-form.
"""
import numpy as np

from sympconn import expr as ex
from sympconn.connection import moment_k, rho
from sympconn.families import (busemann, cube_of_exact, harmonic_deformation,
                               hessian_determinant, u_of_f)

rng = np.random.default_rng(1)

# f = xy + x^3 has constant Hessian determinant -1
f = "x*y+x^3"
conn = cube_of_exact(f)
x, y = conn.domain.sample(5, rng)
Hs = ex.evaluate(hessian_determinant(f), x, y)
U = ex.eval_jet(u_of_f(f), (x, y), 1)
df = ex.eval_jet(ex.parse(f), (x, y), 1)
r = rho(conn, (x, y)).comps
print("cube: Hs =", Hs)
print("  max |K|                     ", np.max(np.abs(moment_k(conn, (x, y)))))
print("  rho - (12 Hs df - 2 dU)     ",
      np.max(np.abs(r[0] - 12 * Hs * df.partial(1, 0) + 2 * U.partial(1, 0))),
      np.max(np.abs(r[1] - 12 * Hs * df.partial(0, 1) + 2 * U.partial(0, 1))))

# in the (u, w) chart the Busemann function gives f = e^beta = -w, so rho should be a multiple of w^2 dw
bu = busemann()
u, w = bu.domain.sample(5, rng)
r = rho(bu, (u, w)).comps
print("busemann: max |K|", np.max(np.abs(moment_k(bu, (u, w)))))
print("  rho_w / w^2 =", np.round(r[1] / w ** 2, 12), " rho_u =", np.round(r[0], 12))

hm = harmonic_deformation("hyperbolic", "1", "0")
r = rho(hm, (u, w)).comps
print("harmonic X = du: rho =", np.round(r[0], 12), np.round(r[1], 12),
      " max |K|", np.max(np.abs(moment_k(hm, (u, w)))))
