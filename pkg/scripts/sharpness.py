"""Profile g(t) = ln(mu(t)/(1-t)) for a_n = exp(sqrt(n)/2): the two-sided gap
inequality on a dyadic grid and the growth of the exceptional-set measure."""

import argparse
import math

from wimanlab.measure import check_2s, default_t_star, estar_log_measure, g_eval

ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
ap.add_argument("--k-min", type=int, default=2)
ap.add_argument("--k-max", type=int, default=16)
ap.add_argument("--t-star", type=float, default=None)
args = ap.parse_args()

print(" k   g(t)*16(1-t)   y-x          1-y          holds")
for k in range(args.k_min, args.k_max + 1):
    t = 1.0 - 2.0**-k
    chk = check_2s(t)
    print(f"{k:2d}   {g_eval(t) * 16 * 2.0**-k:10.6f}   {chk.lhs:.5e}  {chk.rhs:.5e}  {chk.holds}")

t_star = args.t_star if args.t_star is not None else default_t_star()
print(f"\nt* = {t_star}")
prev = None
ln2sq = math.log(2.0) ** 2
for k in range(10, 15):
    est = estar_log_measure(t_star, 1.0 - 2.0**-k)
    inc = "" if prev is None else f"   increment/(ln2)^2 = {(est.value - prev) / ln2sq:.4f}"
    print(f"upper = 1-2^-{k}: measure {est.value:.6f}  witness {est.lower_bound_witness:.6f}{inc}")
    prev = est.value
