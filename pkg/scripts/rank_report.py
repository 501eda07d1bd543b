"""Measured fiber dimension of the coordinate family against the two candidate formulas.

For each model the cotangent rank of (x1..xm, y1..yn) in the envelope is
measured at seeded points and printed beside dim(M)*dim(N) and dim(M)+dim(N).
Among positive dimensions the two formulas agree only at m = n = 2.
"""

import argparse
from dataclasses import dataclass

from envcalc import OracleConfig, ProductModel, embed_A, point_cotangent_rank
from envcalc.oracle import SampleStream


@dataclass
class RankConfig:
    seed: int = 42
    points: int = 100
    max_dim: int = 4


def measure(model: ProductModel, cfg: RankConfig) -> set[int]:
    family = [embed_A(model.coordinate(i)) for i in range(model.dim)]
    stream = SampleStream(cfg.seed, OracleConfig(seed=cfg.seed).domain(model.coordinates), cfg.points)
    return {point_cotangent_rank(model, family, p) for p in stream.points()}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--points", type=int, default=100)
    ap.add_argument("--max-dim", type=int, default=4)
    a = ap.parse_args()
    cfg = RankConfig(a.seed, a.points, a.max_dim)
    print(f"{'m':>2} {'n':>2} {'measured':>9} {'m*n':>4} {'m+n':>4}  note")
    for m in range(1, cfg.max_dim + 1):
        for n in range(1, cfg.max_dim + 1):
            ranks = measure(ProductModel(m, n), cfg)
            value = ",".join(map(str, sorted(ranks)))
            note = "product formula agrees" if m * n == m + n else f"product formula off by {m * n - m - n:+d}"
            print(f"{m:>2} {n:>2} {value:>9} {m * n:>4} {m + n:>4}  {note}")


if __name__ == "__main__":
    main()
