"""Evolve a learned operator under its own Lagrange-multiplier matrix.

Replacing S by lambda (x) I turns the stationarity condition into a
Schrodinger-like equation i dU/dt = lambda U. In the eigenbasis of lambda
each row of the solution only picks up a phase, so the complex rows stay
orthonormal and the diagonal blocks of |U><U| stay constant.

Run:  python demos/ground_state_dynamics.py
"""

import numpy as np

from qclearn import dynamics, states, superop
from qclearn.qcqp import solve

n, m = 4, 80
rng = np.random.default_rng(5)
channel = states.random_mixed_unitary(n, n, 2, rng)
rho = np.array([states.random_density(n, 2, rng) for _ in range(m)])
s = superop.build(states.MappingDataset.from_channel(channel.kraus(), rho), "plain")
sol = solve(s)
print(f"learned operator: F = {sol.fidelity:.6f}, Tr lambda = {sol.multipliers.trace:.6f}")

g = dynamics.prepare(sol)
print("lambda eigenvalues:", np.round(g.lambda_eigs, 5))
print(f"\n{'t':>5} {'unitarity':>11} {'phase of row 0, col 0':>22}")
for t in np.linspace(0, 10, 6):
    v = dynamics.evolve(g, t)
    print(f"{t:>5.1f} {v.unitarity_violation():>11.1e} {v.phase[0, 0]:>22.6f}")

print(f"\n|S Y - Y S| for Y = |U><U|: {dynamics.liouville_commutator_residual(s, sol):.4f}")
print("(nonzero: the single-Hamiltonian picture is an approximation)")

shrink = dynamics.evolve_dissipative(g, 1.0, kappa=5.0)
print("row norms after heat-like step t=1, kappa=5:", np.round(np.linalg.norm(shrink, axis=1), 4))
