"""Independent brute-force oracles shared by the test modules.

Everything here is deliberately written against raw arrays / bit tricks,
not against the package's own operations, so the tests compare two
independent routes to the same answer.
"""

from collections import Counter
from itertools import combinations, product

import numpy as np

from geoexp.design import checkerboard_init, scramble


def balanced_4x4_states():
    """All 4x4 +/-1 matrices with zero row/column sums, by 16-bit scan."""
    states = []
    for bits in range(1 << 16):
        m = np.array(
            [[1 if bits & (1 << (4 * r + c)) else -1 for c in range(4)] for r in range(4)]
        )
        if (m.sum(axis=0) == 0).all() and (m.sum(axis=1) == 0).all():
            states.append(tuple(m.ravel()))
    return states


def enumerate_balanced(g_count, b_count):
    """All balanced +/-1 matrices of a given shape, by row-wise DFS."""
    half = b_count // 2
    row_patterns = []
    for ones in combinations(range(b_count), half):
        row = [-1] * b_count
        for c in ones:
            row[c] = 1
        row_patterns.append(tuple(row))

    out = []
    col_sums = [0] * b_count
    rows = []

    def extend(depth):
        rows_left_after = g_count - depth - 1
        for pattern in row_patterns:
            ok = True
            for c in range(b_count):
                s = col_sums[c] + pattern[c]
                # each column must still be able to reach zero
                if abs(s) > rows_left_after:
                    ok = False
                    break
            if not ok:
                continue
            for c in range(b_count):
                col_sums[c] += pattern[c]
            rows.append(pattern)
            if depth + 1 == g_count:
                out.append(tuple(v for row in rows for v in row))
            else:
                extend(depth + 1)
            rows.pop()
            for c in range(b_count):
                col_sums[c] -= pattern[c]

    extend(0)
    return out


def meet_in_middle_count(n):
    """Count balanced n x n +/-1 matrices by splitting the rows in half.

    Completely different bookkeeping from the DFS: tally the column-sum
    vectors of all half-height stacks, then pair each with its complement.
    """
    half_rows = n // 2
    patterns = []
    for ones in combinations(range(n), n // 2):
        row = [-1] * n
        for c in ones:
            row[c] = 1
        patterns.append(tuple(row))
    tally = Counter()
    for stack in product(patterns, repeat=half_rows):
        sums = tuple(sum(col) for col in zip(*stack))
        tally[sums] += 1
    return sum(cnt * tally[tuple(-s for s in sums)] for sums, cnt in tally.items())


def quadruple_loop_s(entries):
    """S = sum over g, g', b, b' of X[g,b] X[g',b] X[g,b'] X[g',b'], literally."""
    g_count, b_count = entries.shape
    total = 0
    for g in range(g_count):
        for gp in range(g_count):
            for b in range(b_count):
                for bp in range(b_count):
                    total += (
                        entries[g, b]
                        * entries[gp, b]
                        * entries[g, bp]
                        * entries[gp, bp]
                    )
    return total


def sample_chain_states(g_count, b_count, n_samples, thin, seed, burn_in=1000):
    """Record swap-chain states every ``thin`` attempts after burn-in."""
    rng = np.random.default_rng(seed)
    state, _ = scramble(
        checkerboard_init(g_count, b_count), attempts=burn_in, rng=rng, trace_every=None
    )
    counts = Counter()
    for _ in range(n_samples):
        state, _ = scramble(state, attempts=thin, rng=rng, trace_every=None)
        counts[tuple(state.entries.ravel())] += 1
    return counts


# Hand-transcribed unsuitable designs used to exercise the validators.

# Blocks of 4 brands taken 2 at a time over 6 GEOs: balanced, but rows pair
# up into exact opposites (1,6), (2,5), (3,4).
BIB_6X4 = np.array(
    [
        [+1, +1, -1, -1],
        [+1, -1, +1, -1],
        [+1, -1, -1, +1],
        [-1, +1, +1, -1],
        [-1, +1, -1, +1],
        [-1, -1, +1, +1],
    ]
)

# Order-8 Hadamard matrix (Sylvester): orthogonal columns, but the all-ones
# first row/column make it unbalanced as an assignment grid.
HADAMARD_8 = np.array(
    [
        [1, 1, 1, 1, 1, 1, 1, 1],
        [1, -1, 1, -1, 1, -1, 1, -1],
        [1, 1, -1, -1, 1, 1, -1, -1],
        [1, -1, -1, 1, 1, -1, -1, 1],
        [1, 1, 1, 1, -1, -1, -1, -1],
        [1, -1, 1, -1, -1, 1, -1, 1],
        [1, 1, -1, -1, -1, -1, 1, 1],
        [1, -1, -1, 1, -1, 1, 1, -1],
    ]
)
