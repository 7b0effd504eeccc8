"""The doubly constrained energy curve l -> e(m, l) and its relation to the
single-constraint rotating-frame problem.

Three things are visible in the table:
  * the curve is symmetric under l -> -l,
  * its minimum over l sits at l = 0 and equals the plain ground-state energy,
  * for each rotation speed Omega, the rotating-frame minimum e_Omega(m)
    equals min over l >= 0 of e(m, l) - Omega * l (a Legendre-type relation).
"""

import numpy as np

import rotbound as rb

grid = rb.make_grid(128, 8.0)
params = rb.PhysicsParams(lam=1.0, sigma=1.0, k=4.0)
m = 1.0

l_grid = np.arange(-2.0, 2.0 + 1e-9, 0.25)
curve = rb.scan_l(params, m, l_grid, rb.SolveOptions(), grid=grid, warm=True)

print("   l       e(m,l)        omega      Omega")
for l, e, om, Om in zip(curve.l_values, curve.e_values, curve.omegas, curve.Omegas):
    print(f"{l:6.2f}  {e:12.8f}  {om:9.5f}  {Om:9.5f}")
print()

sym = max(
    abs(curve.e_values[i] - curve.e_values[len(curve.l_values) - 1 - i])
    for i in range(len(curve.l_values) // 2)
)
print(f"symmetry: max |e(m,l) - e(m,-l)| = {sym:.2e}")
print()

for Omega in (0.0, 0.5, 1.0):
    run = rb.minimize_mass_only(params, m, Omega, rb.SolveOptions(), grid=grid)
    lg = rb.legendre_check(curve, run.energy_value, Omega)
    print(
        f"Omega = {Omega:g}: e_Omega(m) = {run.energy_value:.8f}, achieved l = "
        f"{run.achieved_l:.3e}, legendre gap = {lg.gap:.2e} at argmin l = {lg.argmin_l:g}"
    )
