"""
Risk rescaling walkthrough
==========================

Every proxy ratio is mapped onto a common one-to-five risk scale before any
tree sees it. This script walks both rescaling modes on small hand-sized
vectors so the piecewise maps are easy to follow.
"""

import numpy as np

from charterseg.rescale import quantile_rescale, threshold_rescale

# ---------------------------------------------------------------- quantile
# The quantile mode anchors min, Q1, median, Q3, max to the scores
# 1, 2, 3, 4, 5 and interpolates linearly between them. On 0..4 the
# quartiles are evenly spaced, so the map is the identity shifted onto the
# score scale.

values = np.array([0.0, 1.0, 2.0, 3.0, 4.0])
print("raw:                 ", values)
print("quantile, increasing:", quantile_rescale(values, "increasing"))

# "decreasing" flips the orientation: a big raw value now means LOW risk.
print("quantile, decreasing:", quantile_rescale(values, "decreasing"))

# Skewed samples stretch the pieces. The knots still land on 1..5 but the
# spacing between raw values is no longer uniform.
skewed = np.array([0.0, 0.1, 0.2, 0.4, 3.0])
print("\nskewed raw:          ", skewed)
print("quantile, increasing:", quantile_rescale(skewed, "increasing"))

# --------------------------------------------------------------- threshold
# The threshold mode scores against a regulatory benchmark u. The safe side
# of u occupies [1, 2] with u itself pinned at exactly 2.0; the risky side
# stretches over (2, 5] out to the worst observed value.

# Capital ratios with a 6% minimum: higher capital is safer, so the
# direction is "decreasing" and the 10% bank scores closest to 1.
capital = np.array([0.02, 0.06, 0.10])
print("\ncapital ratios:      ", capital)
print("threshold at 0.06:   ", threshold_rescale(capital, "decreasing", 0.06))

# Return on assets with a 1% benchmark. The negative-ROA bank is far on the
# risky side and takes the top score of 5.
roa = np.array([0.30, 0.01, -0.05])
print("\nROA:                 ", roa)
print("threshold at 0.01:   ", threshold_rescale(roa, "decreasing", 0.01))

# The benchmark value itself always scores 2.0, whatever the direction.
at_u = threshold_rescale(np.array([0.5, 1.0, 1.5]), "increasing", 1.0)
print("\nvalue == benchmark -> score", at_u[1])
