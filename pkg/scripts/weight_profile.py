"""Print the composite spin-uncertainty profile over the weight b12.

Needs a coefficient file; falls back to the bundled demo set with a
warning so the script stays runnable out of the box.

Usage: python3 scripts/weight_profile.py [coefficients.conf]
"""

from __future__ import annotations

import sys

from hdspec import bundled
from hdspec.angular import SpinUncertaintyParams, read_coefficient_file, transition_table
from hdspec.composite import optimize_weight


def main(argv: list[str]) -> int:
    if argv:
        sets = read_coefficient_file(argv[0])
    else:
        sets = bundled.load_coefficients()
        if sets is None:
            print("no evaluated coefficients bundled; using the demo set", file=sys.stderr)
            sets = bundled.load_demo_coefficients()
    table = transition_table(sets[(0, 0)], sets[(1, 1)], bundled.TRANSITION_LEVELS)
    profile = optimize_weight(table, SpinUncertaintyParams())
    for b, u in profile.profile:
        bar = "#" * int(round(40.0 * u / max(v for _, v in profile.profile)))
        print(f"b12 = {b:4.2f}  u_spin = {u:8.4f} kHz  {bar}")
    print(f"minimum u_spin = {profile.u_star:.4f} kHz at b12 = {profile.b_star:.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
