"""Truncation studies: bnorm of the W-decay matrix vs radius, and the
coefficient decay of the separable expansion of the tensor std bump."""

import argparse

from latbump import bumps
from latbump.bump_analysis import separable_expansion
from latbump.trilinear import w_truncation_scan


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--decay", type=float, default=0.5)
    ap.add_argument("--radii", type=int, nargs="+", default=[1, 2, 4, 8, 16])
    ap.add_argument("--tol", type=float, default=1e-6)
    args = ap.parse_args()

    print(f"W(mu,nu) = (1+|mu|+|nu|)^-{args.decay}")
    print(f"{'radius':>6s} {'lower':>12s} {'upper':>12s}")
    for R, est in w_truncation_scan(args.decay, args.radii):
        print(f"{R:6d} {est.lower:12.6f} {est.upper:12.6f}")

    std2 = bumps.std_bump(2)
    exp = separable_expansion(std2, tol=args.tol)
    print(f"\nexpansion: T={exp.T} cap={exp.cap} terms={len(exp.terms)} error={exp.error:.2e}")
    shells = exp.shell_maxima()
    rises = [s for s in range(1, len(shells)) if shells[s] > shells[s - 1]]
    for s, v in enumerate(shells):
        print(f"  shell {s:3d}  max|b| = {v:.4e}{'  (rise)' if s in rises else ''}")


if __name__ == "__main__":
    main()
