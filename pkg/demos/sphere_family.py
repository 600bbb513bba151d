"""
Critical deformations of the round sphere
-----------------------------------------

The Levi-Civita connection of the round metric, written in the chart
``(1-x^2)^-1 dx^2 + (1-x^2) dy^2``, is deformed by ``t`` times a cubic built
from the Killing field ``d/dy``.  Every member of the family is critical.
This script prints the moment map, the conserved constant and the energy.
"""
import math

import numpy as np

from sympconn.connection import hop_k_closed_form, moment_k, rho, tau
from sympconn.quadrature import Region, energy
from sympconn.families import sphere_family

chart = Region.periodic_rectangle(-1.0, 1.0, 0.0, 2 * math.pi)
x = np.linspace(-0.9, 0.9, 6)
y = np.zeros_like(x)

for t in (0.0, 0.5, 1.0, 2.0):
    conn = sphere_family(t)
    K = moment_k(conn, (x, y))
    r = rho(conn, (x, y))
    tv = tau(conn, (x, y))
    hk = hop_k_closed_form(conn, (x, y), dps=40)
    E = energy(conn, chart)
    print(f"t = {t}")
    print("  K / x          ", np.round(K / x, 12))
    print("  rho_y          ", np.round(r.comps[1], 6))
    print("  tau            ", np.round(tv, 12), "(3t^2/4 =", 0.75 * t * t, ")")
    print("  max |H(K)|     ", np.max(np.abs(hk.comps)))
    print("  energy / 3 pi  ", E / (3 * math.pi))

# K^2 = tau on the circles x = +-1/sqrt(3); sigma is undefined there
conn = sphere_family(1.0)
xs = 1 / math.sqrt(3)
print("tau - K^2 at x = 1/sqrt(3):", float(tau(conn, (xs, 0.0)) - moment_k(conn, (xs, 0.0)) ** 2))
