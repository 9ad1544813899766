"""Tabulate two-ray and free-space pathloss against distance for one link.

    python scripts/two_ray_curve.py --link A:XC70-S60M:LOS --out two_ray.csv
"""
import argparse
import csv
import sys

import numpy as np

from shadowlink import presets
from shadowlink.models import TwoRayParams, free_space_pathloss, los_distance, two_ray_pathloss


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--link", default="A:XC70-S60M:LOS", help="published LOS parameter set")
    ap.add_argument("--d-min", type=float, default=5.0)
    ap.add_argument("--d-max", type=float, default=2000.0)
    ap.add_argument("--points", type=int, default=400)
    ap.add_argument("--out", help="CSV path (default: stdout)")
    args = ap.parse_args(argv)

    params, geom = presets.published_model(args.link)
    if not isinstance(params, TwoRayParams):
        ap.error(f"{args.link} is not a two-ray parameter set")
    d = np.geomspace(args.d_min, args.d_max, args.points)
    pl = two_ray_pathloss(d, params, geom)
    fspl = free_space_pathloss(los_distance(d, geom), geom.wavelength) - params.g_los_db

    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["d_m", "two_ray_db", "free_space_db"])
    for row in zip(d, pl, fspl):
        w.writerow([f"{v:.6g}" for v in row])
    if args.out:
        fh.close()


if __name__ == "__main__":
    main()
