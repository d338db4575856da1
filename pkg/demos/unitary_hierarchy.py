"""Approximate a mixed unitary channel with a short hierarchy of orthogonal maps.

The data come from A -> sum_s p_s U_s A U_s^T with three terms. A single
orthogonal operator cannot reproduce it, so we build levels: each new
level maximizes the same quadratic fidelity but must be orthogonal to the
earlier ones under S. The level fidelities decrease, the S-Gram matrix is
diagonal, and the plain Frobenius products between levels are not zero.

Run:  python demos/unitary_hierarchy.py
"""

import numpy as np

from qclearn import states, superop
from qclearn.hierarchy import build_hierarchy, to_mixed_unitary, weights_from_operator

n, m = 6, 300
rng = np.random.default_rng(3)
channel = states.random_mixed_unitary(n, n, 3, rng)
rho = np.array([states.random_density(n, 1, rng) for _ in range(m)])
ds = states.MappingDataset.from_channel(channel.kraus(), rho)
print("generating weights p_s:", np.round(channel.weights, 4))

s = superop.build(ds, "sqrt")
h = build_hierarchy(s, 4)
print(f"\nF(exact channel)/M = {s.total_fidelity(channel.kraus()) / m:.5f}")
for i, lv in enumerate(h.levels):
    fp = states.total_fidelity_dataset("prop_overlap", ds, lv.u)
    print(f"level {i}: F/M = {lv.fidelity / m:.5f}  proper overlap/M = {fp / m:.5f}  iterations = {lv.iterations}")

np.set_printoptions(precision=3, suppress=True)
print("\n<U_s|S|U_t> / M:\n", h.gram() / m)
print("<U_s|U_t>:\n", h.plain_gram())

# Expand the dominant generating unitary over the levels. Its weights w_s
# give a mixed unitary channel with probabilities w_s^2 / sum w^2.
dominant = channel.unitaries[int(np.argmax(channel.weights))]
w = weights_from_operator(h, dominant)
print("\nweights of the dominant unitary:", np.round(w.w, 4))
test = [states.random_density(n, 2, rng) for _ in range(50)]
for label, ch in (("level 0 alone", to_mixed_unitary(h, [1.0, 0, 0, 0])), ("weighted levels", to_mixed_unitary(h, w))):
    err = np.mean([np.abs(ch.apply(a) - channel.apply(a)).max() for a in test])
    print(f"{label:>16}: mean max-abs output error on 50 fresh inputs = {err:.3e}")
