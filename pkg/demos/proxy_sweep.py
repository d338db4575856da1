"""How the fidelity proxies rate the true channel as inputs get more mixed.

For each input rank N_r we draw M random density matrices, send them
through a fixed channel and score the channel against its own outputs.
With a single Kraus operator the sqrt and vec proxies stay at M while
Tr(varrho sigma) falls off. A mixed unitary channel with several terms
drags every proxy below M.

Run:  python demos/proxy_sweep.py
"""

from qclearn.cli import fig1_rows

n, m = 8, 200
for n_s in (1, 2, 4):
    rows = fig1_rows(n, n, n_s, m, seed=1)
    table = {}
    for n_r, proxy, f in rows:
        table.setdefault(n_r, {})[proxy] = f / m
    print(f"\nKraus rank N_s = {n_s}  (values are F/M)")
    print(f"{'N_r':>4}" + "".join(f"{p:>11}" for p in ("rho_sigma", "sqrt", "vec", "prop")))
    for n_r in sorted(table):
        print(f"{n_r:>4}" + "".join(f"{table[n_r][p]:>11.5f}" for p in ("rho_sigma", "sqrt", "vec", "prop")))
