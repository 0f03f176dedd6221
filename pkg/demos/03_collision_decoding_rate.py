"""How often does an overlap receiver strip a k-packet layer in stage 1?

The receiver must catch the collision, (1-p)^2, and have overheard each of the
k constituents once, (1-p)^k.
"""
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))
from scenarios import OpportunisticSetup  # noqa: E402
from jncsim.topology import trial_rng  # noqa: E402

n = 20_000
for k in (1, 2, 3):
    setup = OpportunisticSetup(k)
    for p in (0.1, 0.2, 0.3):
        rng = trial_rng(5, k)
        rate = np.mean([setup.trial(p, rng) for _ in range(n)])
        print(f"k={k} p={p}: measured {rate:.4f}  predicted {(1 - p) ** (2 + k):.4f}")
