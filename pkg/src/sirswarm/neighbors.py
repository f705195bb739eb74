"""Uniform-grid neighbor search for contact detection.

Positions are hashed into square cells whose side equals the search
radius, so any two points closer than the radius land in the same cell
or in adjacent cells. Candidate pairs are gathered from each occupied
cell and four of its eight neighbors (the forward half), which visits
every unordered cell pair exactly once; an exact distance check then
filters the candidates. The result matches a brute-force all-pairs scan
while touching only local neighborhoods.
"""

from __future__ import annotations

from collections import defaultdict

import numpy as np

__all__ = ["contact_pairs"]

# Forward half of the 8-neighborhood; together with the cell itself this
# covers each adjacent cell pair once.
_FORWARD_OFFSETS = ((1, 0), (-1, 1), (0, 1), (1, 1))


def contact_pairs(positions: np.ndarray, radius: float) -> set[tuple[int, int]]:
    """All unordered index pairs strictly closer than ``radius``.

    Returns a set of (i, j) tuples with i < j. A non-positive radius
    yields no pairs, since distances are never negative.
    """
    if radius <= 0.0 or len(positions) < 2:
        return set()

    cells: defaultdict[tuple[int, int], list[int]] = defaultdict(list)
    for idx in range(len(positions)):
        key = (int(positions[idx, 0] // radius), int(positions[idx, 1] // radius))
        cells[key].append(idx)

    left: list[int] = []
    right: list[int] = []
    for (cx, cy), members in cells.items():
        for a in range(len(members)):
            for b in range(a + 1, len(members)):
                left.append(members[a])
                right.append(members[b])
        for ox, oy in _FORWARD_OFFSETS:
            neighbors = cells.get((cx + ox, cy + oy))
            if neighbors:
                for a in members:
                    for b in neighbors:
                        left.append(a)
                        right.append(b)

    if not left:
        return set()
    li = np.asarray(left)
    ri = np.asarray(right)
    delta = positions[li] - positions[ri]
    close = delta[:, 0] ** 2 + delta[:, 1] ** 2 < radius * radius
    pairs = set()
    for a, b in zip(li[close].tolist(), ri[close].tolist()):
        pairs.add((a, b) if a < b else (b, a))
    return pairs
