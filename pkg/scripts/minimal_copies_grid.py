"""Empirical minimal number of copies n against |<psi|phi>|^2.

Writes one CSV row per (overlap2, n) with the best residual found, and marks
the first n that reaches the target. Nothing here proves minimality; a row
that misses the target only says the search did not find a measurement.
"""

from __future__ import annotations

import argparse
import csv
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from pbrkit.antidistinguish import SearchOptions, search_measurement
from pbrkit.quantum import PureState, qubit


@dataclass
class GridConfig:
    overlaps: list[float] = field(default_factory=lambda: [0.1, 0.25, 0.4, 0.5, 0.6, 0.7, 0.8])
    n_max: int = 4
    restarts: int = 8
    seed: int = 0
    target: float = 1e-8
    out: str = "results/minimal_copies.csv"


def run(cfg: GridConfig) -> list[dict]:
    psi = PureState.basis(0, 2)
    rows = []
    for x in cfg.overlaps:
        phi = qubit(x)
        for n in range(2, cfg.n_max + 1):
            t0 = time.perf_counter()
            res = search_measurement(psi, phi, n, SearchOptions(restarts=cfg.restarts, seed=cfg.seed, target_residual=cfg.target))
            rows.append(
                {
                    "overlap2": x,
                    "n": n,
                    "residual": f"{res.residual:.17g}",
                    "achieved": res.achieved,
                    "restarts_used": res.restarts_used,
                    "seconds": round(time.perf_counter() - t0, 3),
                }
            )
            print(f"overlap2={x:<5} n={n} residual={res.residual:.3e} achieved={res.achieved}")
            if res.achieved:
                break
    return rows


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--overlaps", type=lambda s: [float(v) for v in s.split(",")], default=None)
    p.add_argument("--n-max", type=int, default=4)
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="results/minimal_copies.csv")
    a = p.parse_args()
    cfg = GridConfig(n_max=a.n_max, restarts=a.restarts, seed=a.seed, out=a.out)
    if a.overlaps:
        cfg.overlaps = a.overlaps
    rows = run(cfg)
    out = Path(cfg.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        fh.write(f"# config: {asdict(cfg)}\n")
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
