"""How far a few hundred millivolts reaches in oxygen activity.

The applied voltage sets the oxygen activity at the blocking contact
through the Nernst relation. This script tabulates the mapping at 700 C
in air and shows that +-0.6 V already spans more than 24 decades.
"""

import math

from hwbench import ReferenceAtmosphere, nernst_activity, nernst_voltage

ref = ReferenceAtmosphere(a_o2_reversible=0.21, temperature_k=973.15)

print(f"reversible electrode: a_O2 = {ref.a_o2_reversible} at "
      f"{ref.temperature_k} K\n")
print(f"{'E_app (V)':>10} {'a_O2 at contact':>16} {'log10 a':>9}")
for mv in range(-600, 601, 100):
    e = mv / 1000.0
    a = nernst_activity(e, ref)
    print(f"{e:>10.3f} {a:>16.3e} {math.log10(a):>9.2f}")

lo = nernst_activity(-0.6, ref)
hi = nernst_activity(0.6, ref)
print(f"\nspan over +-0.6 V: {math.log10(hi / lo):.2f} decades")

# the mapping inverts exactly
e = 0.237
back = nernst_voltage(nernst_activity(e, ref), ref)
print(f"round trip at {e} V: back to {back} V")
