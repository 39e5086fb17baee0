"""Maximum-weight bipartite matching over exact integers.

Shortest augmenting paths with vertex potentials (the Hungarian method),
run on the rows-by-(columns + slack) cost matrix so that leaving a row
unmatched is always allowed at weight zero.  Weights may be arbitrarily
large Python ints; callers encode lexicographic tie-breaks that way.
"""

from __future__ import annotations

from typing import Optional, Sequence

Weights = Sequence[Sequence[Optional[int]]]


def max_weight_matching(weights: Weights, n_cols: Optional[int] = None) -> list[Optional[int]]:
    """Return ``match[row] = col or None`` maximizing the total weight.

    ``weights[r][c]`` is the gain of pairing row ``r`` with column ``c``;
    ``None`` forbids the pair.  Unmatched rows contribute zero.
    """
    n = len(weights)
    if n_cols is None:
        n_cols = len(weights[0]) if n else 0
    if n == 0:
        return []
    big = 1 + sum(abs(w) for row in weights for w in row if w is not None)
    forbidden = 2 * big * (n + 1)
    m = n_cols + n  # one slack column per row

    def cost(r: int, c: int) -> int:
        if c >= n_cols:
            return 0
        w = weights[r][c]
        return forbidden if w is None else -w

    # 1-indexed arrays; index 0 is the virtual start column.
    u = [0] * (n + 1)
    v = [0] * (m + 1)
    owner = [0] * (m + 1)
    way = [0] * (m + 1)
    for r in range(1, n + 1):
        owner[0] = r
        c0 = 0
        minv: list[Optional[int]] = [None] * (m + 1)
        used = [False] * (m + 1)
        while True:
            used[c0] = True
            r0 = owner[c0]
            delta: Optional[int] = None
            c1 = 0
            for c in range(1, m + 1):
                if used[c]:
                    continue
                cur = cost(r0 - 1, c - 1) - u[r0] - v[c]
                if minv[c] is None or cur < minv[c]:
                    minv[c] = cur
                    way[c] = c0
                if delta is None or minv[c] < delta:
                    delta = minv[c]
                    c1 = c
            assert delta is not None
            for c in range(m + 1):
                if used[c]:
                    u[owner[c]] += delta
                    v[c] -= delta
                elif minv[c] is not None:
                    minv[c] -= delta
            c0 = c1
            if owner[c0] == 0:
                break
        while c0:
            c1 = way[c0]
            owner[c0] = owner[c1]
            c0 = c1

    match: list[Optional[int]] = [None] * n
    for c in range(1, n_cols + 1):
        r = owner[c]
        if r and weights[r - 1][c - 1] is not None:
            match[r - 1] = c - 1
    return match


def matching_weight(weights: Weights, match: Sequence[Optional[int]]) -> int:
    total = 0
    for r, c in enumerate(match):
        if c is not None:
            w = weights[r][c]
            assert w is not None
            total += w
    return total
