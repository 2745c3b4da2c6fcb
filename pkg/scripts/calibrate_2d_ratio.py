"""Unmodified/modified profile error ratio for |Re u|Re u in 2D at t = T_max/2.

Final data ε·exp(-(|ξ|/a)^{2m}) (m = 1 is a Gaussian). For each shape the box is
sized so the support just fits under the Nyquist frequency and T_max sits at
the validity cap.
"""

import argparse
import time

import numpy as np

from critnls.finalstate import TheoremParameters, construct_backward
from critnls.nonlinearity import preset
from critnls.profile import build_profile, super_gaussian_final_data
from critnls.spectral import Grid


def ratio(n, eps, a, m, dt):
    xs = a * np.log(1e8) ** (1 / (2 * m))
    L = 0.999 * np.pi * n / xs
    T_max = 0.99 * L / (4 * xs)
    fd = super_gaussian_final_data(Grid(2, n, L), eps, a, m)
    p = TheoremParameters.with_defaults(2, T=T_max / 2, T_max=T_max, eps=eps)
    traj = construct_backward(fd, preset("re-abs-re"), p, steps=max(20, int(T_max / 2 / dt)), stride=10**9)
    g1, t = traj.meta["g1"], traj.times[0]
    e = (traj[0] - build_profile(fd, t, g1)).norm()
    e0 = (traj[0] - build_profile(fd, t, 0.0)).norm()
    return T_max, e, e0


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--points", type=int, default=256)
    ap.add_argument("--eps", type=float, default=0.1)
    ap.add_argument("--orders", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--widths", type=float, nargs="+", default=[0.8, 0.5, 0.3])
    ap.add_argument("--dt", type=float, default=0.1)
    args = ap.parse_args()
    for m in args.orders:
        for a in args.widths:
            t0 = time.time()
            T_max, e, e0 = ratio(args.points, args.eps, a, m, args.dt)
            print(f"m={m} a={a} T_max={T_max:.1f} err={e:.3e} unmodified={e0:.3e} ratio={e0 / e:.2f} ({time.time() - t0:.0f}s)", flush=True)


if __name__ == "__main__":
    main()
