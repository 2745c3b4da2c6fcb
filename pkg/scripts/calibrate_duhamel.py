"""Node-count and window study for the non-resonant Duhamel decay of |Re u|Re u in 2D."""

import argparse
import time

import numpy as np

from critnls.analysis import fit_decay, nonresonant_duhamel
from critnls.finalstate import TheoremParameters
from critnls.nonlinearity import preset
from critnls.profile import gaussian_final_data, validity_window
from critnls.spectral import Grid, time_nodes


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--points", type=int, default=256)
    ap.add_argument("--width", type=float, default=0.5)
    ap.add_argument("--T", type=float, default=1.0)
    ap.add_argument("--T-max", type=float, default=20.0)
    ap.add_argument("--nodes", type=int, nargs="+", default=[64, 128])
    args = ap.parse_args()

    xi_s = args.width * np.sqrt(2 * np.log(1e8))
    L = 4 * xi_s * args.T_max * 1.02
    g = Grid(2, args.points, L)
    fd = gaussian_final_data(g, eps=0.1, width=args.width)
    print("grid", g.as_dict(), validity_window(fd))
    p = TheoremParameters.with_defaults(2, T=args.T, T_max=args.T_max)
    nl = preset("re-abs-re")
    ref = None
    for n in args.nodes:
        t0 = time.time()
        s = nonresonant_duhamel(fd, nl, p, nodes=time_nodes(args.T, args.T_max, n))
        v = s["norm"]
        fits = {
            "[2T,Tmax/2]": fit_decay(s.times, v, 2 * args.T, args.T_max / 2),
            "last decade": fit_decay(s.times, v, args.T_max / 10, args.T_max / 2),
        }
        print(n, f"{time.time() - t0:.1f}s", {k: (round(a, 3), round(r, 4)) for k, (a, r) in fits.items()})
        if ref is not None:
            # compare on the shared coarse nodes
            print("   change vs previous node count", np.max(np.abs(np.interp(ref[0], s.times, v) - ref[1])) / np.max(ref[1]))
        ref = (s.times, v)


if __name__ == "__main__":
    main()
