"""Run the equivalence experiment from a JSON config and print the aggregate.

    python3 scripts/run_equivalence.py configs/equivalence.json --out report.json
"""

import argparse
import sys

from latbump.experiment import ExperimentConfig, emit_report, run_equivalence


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("config")
    ap.add_argument("--out")
    ap.add_argument("--format", choices=["json", "csv"], default="json")
    ap.add_argument("--threads", type=int)
    args = ap.parse_args()
    cfg = ExperimentConfig.load(args.config)
    if args.threads:
        cfg.threads = args.threads
    rep = run_equivalence(cfg)
    if args.out:
        emit_report(rep, args.format, args.out)
    agg = rep.aggregate
    print(f"rows={agg['rows']} max (L2,l1)/bnorm={agg['max_ratio_empirical_l1']} "
          f"min certificate/bnorm={agg['min_ratio_certificate']} q-spread={agg['q_spread']}")
    for fam, s in sorted(agg["relative_slopes"].items()):
        print(f"  slope {fam:15s} {s:+.4f}")
    for name, ok in agg["checks"].items():
        print(f"  {name:15s} {'ok' if ok else 'FAILED'}")
    return 0 if all(agg["checks"].values()) else 1


if __name__ == "__main__":
    sys.exit(main())
