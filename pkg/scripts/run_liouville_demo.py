#!/usr/bin/env python3
"""Run the screen + staircase + modulus pipeline over several registry maps."""

import argparse

from confkit.demo import demo_liouville
from confkit.io import dump_json
from confkit.maps import parse_map

MAPS = ["ortho_proj:3,2", "torus_fold", "hopf_derived", "contact_adapted:0.1"]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--maps", nargs="*", default=MAPS)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out-prefix", default=None,
                        help="write liouville_<name>.json per map")
    args = parser.parse_args()

    for name in args.maps:
        spec = parse_map(name)
        report = demo_liouville(spec, seed=args.seed)
        line = f"{spec.name:24s} {report['status']:26s}"
        if report["status"] == "completed":
            ind = report["indicator"]
            line += (f" bounded={ind['hypothesis_bounded_image']} "
                     f"M_image={report['modulus']['image']:.4g} "
                     f"lifted_decreasing={ind['lifted_upper_bounds_decreasing']}")
        print(line)
        if args.out_prefix is not None:
            safe = spec.name.replace(":", "_").replace(",", "_")
            dump_json(report, f"{args.out_prefix}liouville_{safe}.json")


if __name__ == "__main__":
    main()
