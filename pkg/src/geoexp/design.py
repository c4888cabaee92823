"""Balanced treatment-assignment matrices for multibrand GEO experiments.

A design is a G x B grid of +1/-1 entries (+1 = increased ad spend, -1 =
control) in which every row and every column sums to zero: each GEO treats
exactly half of the brands and each brand is treated in exactly half of the
GEOs.  The module provides the alternating checkerboard start, the
margin-preserving 2x2 swap chain used to randomize it, correlation and
collision diagnostics, and two constructions that grow a collision-free
design into a larger one.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "DesignMatrix",
    "CorrelationSummary",
    "ValidationReport",
    "DimensionError",
    "ConstructionError",
    "COLLISION_FREE_6X6",
    "COLLISION_FREE_8X8",
    "checkerboard_init",
    "flip_attempt",
    "scramble",
    "default_attempts",
    "correlations",
    "validate",
    "grow4",
    "grow48",
    "design_to_csv",
    "design_from_csv",
    "design_to_json",
    "design_from_json",
]


class DimensionError(ValueError):
    """A design dimension is odd, too small, or inconsistent."""


class ConstructionError(ValueError):
    """A growth construction was applied to an unsuitable input."""


class DesignMatrix:
    """Immutable G x B matrix of +/-1 assignments with zero row/column sums.

    Rows index GEOs, columns index brands.  Balance is enforced at
    construction, so any ``DesignMatrix`` in hand satisfies the invariants;
    operations return new instances instead of mutating.
    """

    __slots__ = ("entries",)

    def __init__(self, entries):
        arr = np.array(entries, dtype=np.int64)
        if arr.ndim != 2:
            raise DimensionError("design entries must form a 2-D grid")
        g, b = arr.shape
        if g < 2 or b < 2 or g % 2 != 0 or b % 2 != 0:
            raise DimensionError(
                f"design dimensions must be even and >= 2, got {g}x{b}"
            )
        if not np.isin(arr, (-1, 1)).all():
            raise ValueError("design entries must be +1 or -1")
        if (arr.sum(axis=1) != 0).any():
            raise ValueError("every GEO row must sum to zero")
        if (arr.sum(axis=0) != 0).any():
            raise ValueError("every brand column must sum to zero")
        arr.setflags(write=False)
        self.entries = arr

    @property
    def g_count(self) -> int:
        return self.entries.shape[0]

    @property
    def b_count(self) -> int:
        return self.entries.shape[1]

    def __repr__(self) -> str:
        return f"DesignMatrix({self.g_count}x{self.b_count})"


@dataclass(frozen=True)
class CorrelationSummary:
    """Min / max / root-mean-square of the off-diagonal pair correlations.

    ``brand_*`` summarize correlations between brand columns,
    ``geo_*`` between GEO rows.
    """

    brand_min: float
    brand_max: float
    brand_rms: float
    geo_min: float
    geo_max: float
    geo_rms: float


@dataclass(frozen=True)
class ValidationReport:
    """Balance flag plus all colliding row pairs and column pairs.

    Two +/-1 vectors collide when they are equal or exact opposites; a
    colliding pair of rows (or columns) confounds the corresponding effects.
    """

    balanced: bool
    row_collisions: list[tuple[int, int]]
    column_collisions: list[tuple[int, int]]

    @property
    def collision_free(self) -> bool:
        return not self.row_collisions and not self.column_collisions


def _as_entries(design) -> np.ndarray:
    """Accept a DesignMatrix or a raw 2-D +/-1 array."""
    if isinstance(design, DesignMatrix):
        return design.entries
    arr = np.asarray(design, dtype=np.int64)
    if arr.ndim != 2:
        raise DimensionError("expected a 2-D grid of +/-1 entries")
    if not np.isin(arr, (-1, 1)).all():
        raise ValueError("entries must be +1 or -1")
    return arr


def checkerboard_init(g_count: int, b_count: int) -> DesignMatrix:
    """Alternating +1/-1 pattern: entry (g, b) is +1 when g + b is even.

    Balanced by construction for even dimensions, but every pair of brands
    is either always treated together or always oppositely, which is why it
    is only a starting point for scrambling.
    """
    if g_count < 2 or b_count < 2 or g_count % 2 != 0 or b_count % 2 != 0:
        raise DimensionError(
            f"design dimensions must be even and >= 2, got {g_count}x{b_count}"
        )
    g = np.arange(g_count)[:, None]
    b = np.arange(b_count)[None, :]
    return DesignMatrix(np.where((g + b) % 2 == 0, 1, -1))


def _try_flip(entries: np.ndarray, g1: int, g2: int, b1: int, b2: int) -> bool:
    """Flip the 2x2 submatrix at distinct rows/cols in place if flippable.

    The submatrix is flippable exactly when it is one of the two balanced
    diagonal patterns (+ -, - +) or (- +, + -); negating all four cells then
    swaps one pattern for the other and preserves all row and column sums.
    """
    a = entries[g1, b1]
    if (
        entries[g2, b2] == a
        and entries[g1, b2] == -a
        and entries[g2, b1] == -a
    ):
        entries[g1, b1] = -a
        entries[g2, b2] = -a
        entries[g1, b2] = a
        entries[g2, b1] = a
        return True
    return False


def flip_attempt(
    design: DesignMatrix, rng: np.random.Generator
) -> tuple[DesignMatrix, bool]:
    """One step of the 2x2 swap chain.

    Samples two distinct rows and two distinct columns uniformly.  If the
    selected submatrix is flippable the swap is always made (acceptance
    probability 1 keeps the chain reversible with respect to the uniform
    distribution on balanced matrices); otherwise the design is returned
    unchanged.
    """
    g_count, b_count = design.entries.shape
    g1 = int(rng.integers(g_count))
    g2 = (g1 + 1 + int(rng.integers(g_count - 1))) % g_count
    b1 = int(rng.integers(b_count))
    b2 = (b1 + 1 + int(rng.integers(b_count - 1))) % b_count
    work = design.entries.copy()
    if _try_flip(work, g1, g2, b1, b2):
        return DesignMatrix(work), True
    return design, False


def default_attempts(g_count: int, b_count: int) -> int:
    """Default scramble length 2*G*B*25.

    Roughly one attempt in eight hits a flippable submatrix and each flip
    reverses four cells, so this budget reverses each cell about 25 times
    in expectation.
    """
    return 2 * g_count * b_count * 25


def scramble(
    design: DesignMatrix,
    attempts: int | None = None,
    rng: np.random.Generator | None = None,
    trace_every: int | None = 10,
) -> tuple[DesignMatrix, list[CorrelationSummary]]:
    """Randomize a balanced design with repeated 2x2 swap attempts.

    Equivalent to applying ``flip_attempt`` ``attempts`` times (default
    ``default_attempts(G, B)``).  When ``trace_every`` is an integer, a
    ``CorrelationSummary`` is recorded after every ``trace_every``-th
    accepted flip; pass ``None`` to skip tracing.
    """
    if rng is None:
        rng = np.random.default_rng()
    if attempts is None:
        attempts = default_attempts(design.g_count, design.b_count)
    if attempts < 0:
        raise ValueError("attempts must be >= 0")
    if trace_every is not None and trace_every < 1:
        raise ValueError("trace_every must be >= 1 (or None to disable)")
    g_count, b_count = design.entries.shape
    trace: list[CorrelationSummary] = []
    if attempts == 0:
        return design, trace

    # Presampling the proposal indices keeps the sequential loop tight.
    gs1 = rng.integers(0, g_count, size=attempts).tolist()
    gs2 = rng.integers(0, g_count - 1, size=attempts).tolist()
    bs1 = rng.integers(0, b_count, size=attempts).tolist()
    bs2 = rng.integers(0, b_count - 1, size=attempts).tolist()

    grid = design.entries.tolist()
    accepted = 0
    for g1, go, b1, bo in zip(gs1, gs2, bs1, bs2):
        g2 = g1 + 1 + go
        if g2 >= g_count:
            g2 -= g_count
        b2 = b1 + 1 + bo
        if b2 >= b_count:
            b2 -= b_count
        row1 = grid[g1]
        a = row1[b1]
        row2 = grid[g2]
        if row2[b2] == a and row1[b2] == -a and row2[b1] == -a:
            row1[b1] = -a
            row2[b2] = -a
            row1[b2] = a
            row2[b1] = a
            accepted += 1
            if trace_every is not None and accepted % trace_every == 0:
                trace.append(correlations(np.asarray(grid)))
    return DesignMatrix(grid), trace


def correlations(design) -> CorrelationSummary:
    """Summarize pairwise brand and GEO correlations of a +/-1 grid.

    The correlation of brands b, b' is (1/G) * sum_g X[g,b] * X[g,b']; GEO
    pairs are defined symmetrically with (1/B).  Only off-diagonal pairs
    contribute to the summary.
    """
    entries = _as_entries(design)
    g_count, b_count = entries.shape
    if g_count < 2 or b_count < 2:
        raise DimensionError("correlations need at least two rows and columns")
    brand = (entries.T @ entries) / g_count
    geo = (entries @ entries.T) / b_count
    off_b = brand[~np.eye(b_count, dtype=bool)]
    off_g = geo[~np.eye(g_count, dtype=bool)]
    return CorrelationSummary(
        brand_min=float(off_b.min()),
        brand_max=float(off_b.max()),
        brand_rms=float(np.sqrt(np.mean(off_b**2))),
        geo_min=float(off_g.min()),
        geo_max=float(off_g.max()),
        geo_rms=float(np.sqrt(np.mean(off_g**2))),
    )


def validate(design) -> ValidationReport:
    """Check balance and list all colliding row pairs and column pairs.

    Accepts any +/-1 grid, not only ``DesignMatrix`` instances, so that
    candidate designs from other constructions can be screened.
    """
    entries = _as_entries(design)
    g_count, b_count = entries.shape
    balanced = bool(
        (entries.sum(axis=1) == 0).all() and (entries.sum(axis=0) == 0).all()
    )
    row_dots = entries @ entries.T
    col_dots = entries.T @ entries
    row_pairs = [
        (int(i), int(j))
        for i, j in zip(*np.nonzero(np.triu(np.abs(row_dots) == b_count, k=1)))
    ]
    col_pairs = [
        (int(i), int(j))
        for i, j in zip(*np.nonzero(np.triu(np.abs(col_dots) == g_count, k=1)))
    ]
    return ValidationReport(
        balanced=balanced, row_collisions=row_pairs, column_collisions=col_pairs
    )


def _growth_input(design: DesignMatrix) -> np.ndarray:
    report = validate(design)
    if not report.balanced:
        raise ConstructionError("growth requires a balanced design")
    if not report.collision_free:
        raise ConstructionError(
            "growth requires a collision-free design; found row collisions "
            f"{report.row_collisions} and column collisions "
            f"{report.column_collisions}"
        )
    return design.entries


def grow4(
    design: DesignMatrix,
    row_a: int = 0,
    row_b: int = 1,
    col_a: int = 0,
    col_b: int = 1,
    z: int = 1,
) -> DesignMatrix:
    """Extend a balanced collision-free design by 4 GEOs and 4 brands.

    The new columns are (c_a, -c_a, c_b, -c_b) and the new rows are
    (r_a, -r_a, r_b, -r_b), padded with a +/-z block chosen so every new
    row and column still sums to zero.  The result is balanced and
    collision-free whenever the input is.
    """
    entries = _growth_input(design)
    if row_a == row_b or col_a == col_b:
        raise ConstructionError("growth rows and columns must be distinct")
    if z not in (-1, 1):
        raise ConstructionError("z must be +1 or -1")
    r1, r2 = entries[row_a], entries[row_b]
    c1, c2 = entries[:, col_a], entries[:, col_b]
    top = np.hstack([entries, np.column_stack([c1, -c1, c2, -c2])])
    pad = np.array(
        [
            [z, z, -z, -z],
            [z, z, -z, -z],
            [-z, -z, z, z],
            [-z, -z, z, z],
        ],
        dtype=np.int64,
    )
    bottom = np.hstack([np.vstack([r1, -r1, r2, -r2]), pad])
    return DesignMatrix(np.vstack([top, bottom]))


def grow48(
    design: DesignMatrix,
    rows: tuple[int, int] = (0, 1),
    cols: tuple[int, int, int, int] = (0, 1, 2, 3),
    z1: int = 1,
    z2: int = 1,
) -> DesignMatrix:
    """Extend a balanced collision-free design by 4 GEOs and 8 brands.

    Appends mirrored copies of four chosen columns and two chosen rows with
    two +/-z padding blocks.  The output is balanced; unlike ``grow4`` it is
    not guaranteed collision-free.
    """
    entries = _growth_input(design)
    row_a, row_b = rows
    if row_a == row_b:
        raise ConstructionError("growth rows must be distinct")
    if len(set(cols)) != 4:
        raise ConstructionError("growth columns must be four distinct indices")
    if z1 not in (-1, 1) or z2 not in (-1, 1):
        raise ConstructionError("z1 and z2 must be +1 or -1")
    r1, r2 = entries[row_a], entries[row_b]
    cs = [entries[:, c] for c in cols]
    new_cols = np.column_stack(
        [cs[0], -cs[0], cs[1], -cs[1], cs[2], -cs[2], cs[3], -cs[3]]
    )
    top = np.hstack([entries, new_cols])
    pad_row_1 = [z1, z1, -z1, -z1, z2, z2, -z2, -z2]
    pad_row_2 = [-z1, -z1, z1, z1, -z2, -z2, z2, z2]
    pad = np.array([pad_row_1, pad_row_1, pad_row_2, pad_row_2], dtype=np.int64)
    bottom = np.hstack([np.vstack([r1, -r1, r2, -r2]), pad])
    return DesignMatrix(np.vstack([top, bottom]))


def _matrix_from_plus_dot(text: str) -> DesignMatrix:
    rows = [
        [1 if ch == "+" else -1 for ch in line.split()]
        for line in text.strip().splitlines()
    ]
    return DesignMatrix(rows)


# Two hand-picked collision-free balanced squares; the smallest sizes at
# which collision-free designs exist.  Useful seeds for grow4 / grow48.
COLLISION_FREE_6X6 = _matrix_from_plus_dot(
    """
    + + + . . .
    + + . + . .
    + . . . + +
    . + . . + +
    . . + + + .
    . . + + . +
    """
)

COLLISION_FREE_8X8 = _matrix_from_plus_dot(
    """
    + + + + . . . .
    + + . . . . + +
    + . + . + + . .
    + . . + . + + .
    . + + + + . . .
    . + . . + + . +
    . . + . + . + +
    . . . + . + + +
    """
)


def design_to_csv(design: DesignMatrix, path) -> None:
    """Write a design as CSV: header brand_1..brand_B, one row per GEO."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"brand_{b + 1}" for b in range(design.b_count)])
        for row in design.entries:
            writer.writerow(["+1" if v == 1 else "-1" for v in row])


def design_from_csv(path) -> DesignMatrix:
    """Read a design written by :func:`design_to_csv`."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or not all(h.startswith("brand_") for h in header):
            raise ValueError(f"{path}: expected a brand_1..brand_B header row")
        rows = [[int(cell) for cell in row] for row in reader if row]
    return DesignMatrix(rows)


def design_to_json(design: DesignMatrix, path) -> None:
    """Write a design as JSON with g_count, b_count and row-major entries."""
    payload = {
        "g_count": design.g_count,
        "b_count": design.b_count,
        "entries": [int(v) for v in design.entries.ravel()],
    }
    Path(path).write_text(json.dumps(payload) + "\n")


def design_from_json(path) -> DesignMatrix:
    """Read a design written by :func:`design_to_json`."""
    payload = json.loads(Path(path).read_text())
    entries = np.asarray(payload["entries"], dtype=np.int64).reshape(
        payload["g_count"], payload["b_count"]
    )
    return DesignMatrix(entries)
