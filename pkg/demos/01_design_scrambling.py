"""Walk through the balanced-design machinery.

Start from the alternating checkerboard (perfectly balanced but with every
brand pair perfectly correlated), randomize it with margin-preserving 2x2
swaps, and watch the pairwise correlations settle.  Finish with the
collision diagnostics and the growth constructions.

Run:  python3 demos/01_design_scrambling.py
"""

import numpy as np

from geoexp.design import (
    COLLISION_FREE_6X6,
    COLLISION_FREE_8X8,
    checkerboard_init,
    correlations,
    design_to_csv,
    grow4,
    grow48,
    scramble,
    validate,
)

rng = np.random.default_rng(20260809)

print("=== checkerboard start: 20 GEOs x 30 brands ===")
start = checkerboard_init(20, 30)
summary = correlations(start)
print(f"row sums all zero: {(start.entries.sum(axis=1) == 0).all()}")
print(f"column sums all zero: {(start.entries.sum(axis=0) == 0).all()}")
print(f"interbrand rms correlation: {summary.brand_rms:.6g}  <- every pair +-1!")

print()
print("=== scrambling with 30,000 swap attempts (2 * G * B * 25) ===")
design, trace = scramble(start, rng=rng)
summary = correlations(design)
print(f"accepted flips: about {len(trace) * 10}")
print(f"still balanced: {validate(design).balanced}")
print(
    "interbrand correlations now: "
    f"min {summary.brand_min:.6g}, max {summary.brand_max:.6g}, rms {summary.brand_rms:.6g}"
)
print(
    "interGEO correlations now:   "
    f"min {summary.geo_min:.6g}, max {summary.geo_max:.6g}, rms {summary.geo_rms:.6g}"
)
print("rms trace (every 300 accepted flips):")
for i in range(29, len(trace), 30):
    print(f"  flips {10 * (i + 1):>5}: brand rms {trace[i].brand_rms:.4f}")

design_to_csv(design, "design_20x30.csv")
print("wrote design_20x30.csv")

print()
print("=== collisions: why some classical constructions fail ===")
# block design over 4 brands in 6 GEOs: every GEO pair is identical or opposite
bib = np.array(
    [
        [+1, +1, -1, -1],
        [+1, -1, +1, -1],
        [+1, -1, -1, +1],
        [-1, +1, +1, -1],
        [-1, +1, -1, +1],
        [-1, -1, +1, +1],
    ]
)
report = validate(bib)
print(f"6x4 block design: balanced={report.balanced}, row collisions={report.row_collisions}")
print("(GEO pairs (1,6), (2,5), (3,4) are confounded)")

print()
print("=== collision-free seeds and growth ===")
for name, m in (("6x6", COLLISION_FREE_6X6), ("8x8", COLLISION_FREE_8X8)):
    r = validate(m)
    print(f"{name}: balanced={r.balanced}, collision-free={r.collision_free}")
grown = grow4(COLLISION_FREE_6X6)
r = validate(grown)
print(f"grow4(6x6) -> {grown.g_count}x{grown.b_count}: collision-free={r.collision_free}")
wide = grow48(COLLISION_FREE_8X8)
print(f"grow48(8x8) -> {wide.g_count}x{wide.b_count}: balanced={validate(wide).balanced}")
