"""
Where a spike lands
===================

A population spike ``lambda`` shows up in the sample as an eigenvalue
near ``theta(lambda)``, the root of a scalar equation built on the bulk's
Stieltjes transform.  For large ``lambda`` the ratio ``theta/lambda``
approaches ``1/(1 - y)``: the noise in ``S2`` inflates every direction.
"""

from spikefisher.limitlaw import classical_limit, solve_theta, wachter_support

c, y = 1 / 3, 0.2
_, b = wachter_support(c, y)
print(f"bulk edge b = {b:.4f}")
print(f"{'lambda':>8} {'theta':>12} {'theta(1-y)/lambda':>18} {'fixed-q limit':>14}")
for lam in (3, 5, 10, 20, 50, 100, 500, 5000):
    sol = solve_theta(lam, c, y)
    print(f"{lam:8g} {sol.theta:12.4f} {sol.theta * (1 - y) / lam:18.6f} {classical_limit(lam, c, y):14.4f}")

##############################################################################
# Spikes too small to escape the bulk have no admissible root.  The
# threshold is ``(1 + sqrt(c + y - cy)) / (1 - y)``.

threshold = (1 + (c + y - c * y) ** 0.5) / (1 - y)
print(f"\ndetachment threshold: {threshold:.4f}")
try:
    solve_theta(0.95 * threshold, c, y)
except ValueError as exc:
    print(f"lambda = {0.95 * threshold:.3f}: {exc}")
