"""Run every property suite over several seeds and models and tabulate the outcome.

    python scripts/run_all_suites.py --seeds 1 2 3 42 --models 2,2 1,1 3,2
"""

import argparse
import time
from dataclasses import dataclass, field

from envcalc import SUITES, OracleConfig, ProductModel, Session, run_suite


@dataclass
class SweepConfig:
    seeds: list[int] = field(default_factory=lambda: [42])
    models: list[tuple[int, int]] = field(default_factory=lambda: [(2, 2)])
    suites: list[str] = field(default_factory=lambda: list(SUITES))


def sweep(cfg: SweepConfig) -> bool:
    clean = True
    print(f"{'model':>6} {'seed':>5} {'suite':<18} {'pass':>5} {'fail':>5} {'undet':>5} {'worst':>10} {'secs':>6}")
    for m, n in cfg.models:
        for seed in cfg.seeds:
            session = Session(ProductModel(m, n), OracleConfig(seed=seed))
            for name in cfg.suites:
                t0 = time.perf_counter()
                r = run_suite(name, session)
                s = r.summary
                clean = clean and r.ok
                print(
                    f"{m},{n:<4} {seed:>5} {name:<18} {s['pass']:>5} {s['fail']:>5} {s['undetermined']:>5} "
                    f"{r.worst_residual:>10.2e} {time.perf_counter() - t0:>6.2f}"
                )
    return clean


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, nargs="+", default=[42])
    ap.add_argument("--models", nargs="+", default=["2,2"])
    ap.add_argument("--suites", nargs="+", default=list(SUITES), choices=list(SUITES))
    a = ap.parse_args()
    models = [tuple(int(v) for v in s.split(",")) for s in a.models]
    ok = sweep(SweepConfig(a.seeds, models, a.suites))
    print("all clean" if ok else "FAILURES present")
    raise SystemExit(0 if ok else 1)


if __name__ == "__main__":
    main()
