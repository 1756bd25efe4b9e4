"""Finite-difference gradient check across variants, seeds and step sizes.

Shows where central differences stop being trustworthy: too large a step
picks up curvature, too small a step drowns in rounding.
"""

import argparse

from detmath.boxes import Variant
from detmath.gradcheck import gradient_check


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--samples", type=int, default=1000)
    parser.add_argument("--seeds", type=int, default=3)
    args = parser.parse_args()

    steps = (1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8)
    print(f"{'loss':<5} {'seed':>4} " + " ".join(f"{s:>9.0e}" for s in steps))
    for variant in Variant:
        for seed in range(args.seeds):
            errs = [gradient_check(variant, args.samples, seed, step=s).max_rel_err for s in steps]
            print(f"{variant.value:<5} {seed:>4} " + " ".join(f"{e:>9.1e}" for e in errs))


if __name__ == "__main__":
    main()
