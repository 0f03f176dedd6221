"""Regenerate the four sweeps as CSV + SVG under ./out (slow at full trial count)."""
import sys
from pathlib import Path

from jncsim.cli import main

out = Path(__file__).parent / "out"
out.mkdir(exist_ok=True)
trials = sys.argv[1] if len(sys.argv) > 1 else "2000"

for preset in ("fig2", "fig3", "fig4", "fig5"):
    print("==", preset)
    main(["sweep", "--preset", preset, "--trials", trials, "--seed", "1",
          "--out", str(out / f"{preset}.csv"), "--svg", str(out / f"{preset}.svg")])
    print((out / f"{preset}.csv").read_text())
