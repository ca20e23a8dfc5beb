"""Significance testing and series utilities.

The Mann-Whitney U test is two-sided on U = min(U_a, U_b).  Small samples
(n*m <= 400) get an exact p-value: the full null distribution of the rank
sum is built by dynamic programming over doubled midranks (doubling keeps
tied midranks integral), which is equivalent to enumerating all C(n+m, n)
rank splits.  Larger samples use the normal approximation with tie and
continuity corrections.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

EXACT_LIMIT = 400  # exact enumeration whenever n*m is at or below this


@dataclass
class TestResult:
    u_statistic: float
    p_value: float
    method: str                 # "exact" or "normal_approx"
    degenerate: bool = False    # all pooled values identical

    __test__ = False            # not a pytest collection target


def _midranks(pooled: np.ndarray) -> np.ndarray:
    """Average ranks (1-based) with ties sharing their rank mean."""
    order = np.argsort(pooled, kind="stable")
    ranks = np.empty(len(pooled))
    i = 0
    while i < len(pooled):
        j = i
        while j + 1 < len(pooled) and pooled[order[j + 1]] == pooled[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _exact_p(doubled: list[int], n: int, u2_obs: int, nm2: int) -> float:
    """P(min(U_a, U_b) <= observed) over all size-n subsets of the pooled
    sample, everything in doubled units so ties stay integral."""
    # table[k][s] = number of k-subsets with doubled-rank sum s
    table = [Counter() for _ in range(n + 1)]
    table[0][0] = 1
    for d in doubled:
        for k in range(min(n, len(doubled)), 0, -1):
            if not table[k - 1]:
                continue
            target = table[k]
            for s, c in table[k - 1].items():
                target[s + d] += c
    favourable = 0
    combinations = 0
    base2 = n * (n + 1)  # doubled n(n+1)/2
    for s, count in table[n].items():
        combinations += count
        ua2 = s - base2
        if min(ua2, nm2 - ua2) <= u2_obs:
            favourable += count
    return favourable / combinations


def mann_whitney_u(a, b) -> TestResult:
    """Two-sided Mann-Whitney U test of two independent samples."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n, m = len(a), len(b)
    if n < 1 or m < 1:
        raise ValueError("both samples need at least one value")
    pooled = np.concatenate([a, b])
    degenerate = bool(np.all(pooled == pooled[0]))
    method = "exact" if n * m <= EXACT_LIMIT else "normal_approx"
    ranks = _midranks(pooled)
    u_a = float(ranks[:n].sum() - n * (n + 1) / 2.0)
    u_b = n * m - u_a
    u = min(u_a, u_b)
    if degenerate:
        return TestResult(u, 1.0, method, degenerate=True)
    if method == "exact":
        doubled = [int(round(2 * r)) for r in ranks]
        p = _exact_p(doubled, n, int(round(2 * u)), 2 * n * m)
    else:
        N = n + m
        _, tie_counts = np.unique(pooled, return_counts=True)
        tie_term = float(np.sum(tie_counts.astype(float) ** 3 - tie_counts))
        var = n * m / 12.0 * ((N + 1) - tie_term / (N * (N - 1)))
        # continuity correction toward the mean; U = min(...) never exceeds nm/2
        z = (u - n * m / 2.0 + 0.5) / math.sqrt(var)
        p = 2.0 * 0.5 * math.erfc(-z / math.sqrt(2.0))
    return TestResult(u, min(max(p, 0.0), 1.0), method)


def best_so_far_series(values) -> list[float]:
    """Running maximum of a fitness series."""
    values = list(values)
    if not values:
        raise ValueError("series is empty")
    out = []
    best = -math.inf
    for v in values:
        best = max(best, v)
        out.append(best)
    return out
