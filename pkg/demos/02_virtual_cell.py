"""The ground-truth cell: its I-V curve and the derivative identity.

The simulated cell hides a two-term conductivity power law. Its steady
I-V curve follows by integrating the conductivity along the voltage axis,
and the local slope divided by 2*pi*a must give the conductivity back.
That identity is what the whole measurement method rests on.
"""

import math

from hwbench import (
    CellGeometry,
    GroundTruthCell,
    ReferenceAtmosphere,
    conductivity_from_derivative,
    electron_conductivity,
    nernst_activity,
    steady_current,
)

geom = CellGeometry(contact_radius_m=100e-6)
ref = ReferenceAtmosphere(a_o2_reversible=0.21, temperature_k=973.15)
cell = GroundTruthCell(sigma_n_ref=1e-4, sigma_p_ref=1e-4, a_ref=0.21,
                       gaussian_noise_a=0.0)

print(f"{'E (V)':>7} {'I_ss (A)':>12} {'sigma from dI/dE':>17} "
      f"{'sigma truth':>12}")
for mv in range(-600, 601, 150):
    e = mv / 1000.0
    i_ss = steady_current(e, cell, ref, geom)
    h = 1e-5
    di_de = (steady_current(e + h, cell, ref, geom)
             - steady_current(e - h, cell, ref, geom)) / (2 * h)
    sigma = conductivity_from_derivative(di_de, geom)
    truth = electron_conductivity(nernst_activity(e, ref), cell)
    print(f"{e:>7.2f} {i_ss:>12.3e} {sigma:>17.6e} {truth:>12.6e}")

print("\nthe S-shaped curve is odd-symmetric here because both carriers "
      "share the same reference conductivity")
