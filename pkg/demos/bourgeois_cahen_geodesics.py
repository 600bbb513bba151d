"""
Geodesics of the Bourgeois-Cahen connections
--------------------------------------------

For ``tau < 0`` the connection is defined on the whole plane.  Along every
geodesic ``(tau - x^2) y'`` is constant, and with ``x = sqrt(-tau) sinh u``
the x-motion reduces to a one-dimensional energy equation.  Here twenty
random geodesics are run to ``t = 100`` and the drift of both integrals
is printed.
"""
import numpy as np

from sympconn.families import bourgeois_cahen
from sympconn.geometry import (GeodesicState, bc_energy_drift, bc_first_integral,
                               conserved_rho_along, integrate_many)

tau0 = -1.0
conn = bourgeois_cahen(0.0, 0.0, tau0, tau0)
inits = [GeodesicState(*s) for s in np.random.default_rng(0).uniform(-1, 1, (20, 4))]
trajs = integrate_many(conn, inits, 100.0, jobs=4)

print(" #  status      x(100)        first-integral drift   energy drift")
for i, tr in enumerate(trajs):
    I = bc_first_integral(tr, tau0)
    print(f"{i:2d}  {tr.status:10s}  {tr.x[-1]: .4e}   {np.max(np.abs(I - I[0])):.2e}"
          f"               {bc_energy_drift(tr, tau0, 0.0, tau0):.2e}")

# off the preferred line q = tau the curvature one-form is no longer conserved
crit = bourgeois_cahen(0.0, 0.0, 0.5, tau0)
tr = integrate_many(crit, inits[:1], 100.0)[0]
print("rho(gamma') drift, q = tau:", conserved_rho_along(conn, trajs[0]))
print("rho(gamma') drift, q = 0.5:", conserved_rho_along(crit, tr))
