"""The infinite-field DNC bound against brute-force simulation."""
import numpy as np

from jncsim.protocols import dnc_expected_transmissions, rlnc_inf_simulate
from jncsim.topology import trial_rng

np.set_printoptions(precision=4)

# %%
B = 20
print(" N    p    bound     MC (1e5)   rel err")
for N in (1, 5, 10, 20):
    for p in (0.1, 0.2, 0.3):
        ex = dnc_expected_transmissions(N, B, p)
        mc = rlnc_inf_simulate(N, B, p, trial_rng(1, N), trials=100_000).mean()
        print(f"{N:2d}  {p:.1f}  {ex:8.4f}  {mc:8.4f}   {abs(mc - ex) / ex:.5f}")

# %%
# a single receiver just needs B successes: B / (1 - p)
for p in (0.0, 0.1, 0.5):
    print(p, dnc_expected_transmissions(1, B, p), B / (1 - p))
