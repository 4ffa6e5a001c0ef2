"""Regenerate the exact MWW critical-value table embedded in
intradayvol.stats_tests.

For sample sizes (m, n) the null distribution of U is computed by the
standard recurrence on the count of rank configurations,

    N(m, n, u) = N(m - 1, n, u - n) + N(m, n - 1, u),

and the two-tailed critical value at confidence 1 - q is the largest u
with P(U <= u) <= q/2 (or -1 when even u = 0 is too likely). The script
prints a Python literal ready to paste over _MWW_CRIT_95, and checks it
against the currently embedded table.

Usage: python scripts/gen_mww_tables.py [--max-n 20] [--alpha 0.05]
"""
from __future__ import annotations

import argparse
from fractions import Fraction
from functools import lru_cache
from math import comb


@lru_cache(maxsize=None)
def _count(m: int, n: int, u: int) -> int:
    """Number of rank arrangements of (m, n) samples with U statistic u."""
    if u < 0:
        return 0
    if m == 0 or n == 0:
        return 1 if u == 0 else 0
    return _count(m - 1, n, u - n) + _count(m, n - 1, u)


def critical_value(m: int, n: int, tail_prob: Fraction) -> int:
    """Largest u with P(U <= u) <= tail_prob, or -1 if none exists."""
    total = comb(m + n, m)
    cum = 0
    crit = -1
    for u in range(m * n // 2 + 1):
        cum += _count(m, n, u)
        if Fraction(cum, total) <= tail_prob:
            crit = u
        else:
            break
    return crit


def build_table(max_n: int, alpha: float) -> dict[int, dict[int, int]]:
    tail = Fraction(alpha).limit_denominator(10 ** 6) / 2
    return {m: {n: critical_value(m, n, tail) for n in range(m, max_n + 1)}
            for m in range(1, max_n + 1)}


def render(table: dict[int, dict[int, int]]) -> str:
    lines = ["_MWW_CRIT_95 = {"]
    for m, row in table.items():
        cells = ", ".join(f"{n}: {c}" for n, c in row.items())
        lines.append(f"    {m}: {{{cells}}},")
    lines.append("}")
    return "\n".join(lines)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--max-n", type=int, default=20)
    ap.add_argument("--alpha", type=float, default=0.05)
    ap.add_argument("--check", action="store_true",
                    help="only compare against the embedded table")
    args = ap.parse_args(argv)

    table = build_table(args.max_n, args.alpha)
    if not args.check:
        print(render(table))

    if args.max_n == 20 and args.alpha == 0.05:
        from intradayvol.stats_tests import _MWW_CRIT_95
        mismatches = [
            (m, n, _MWW_CRIT_95[m][n], table[m][n])
            for m in table for n in table[m]
            if _MWW_CRIT_95[m][n] != table[m][n]
        ]
        if mismatches:
            for m, n, old, new in mismatches:
                print(f"MISMATCH ({m}, {n}): embedded {old}, recomputed {new}")
            return 1
        print("# embedded table matches" if not args.check else "embedded table matches")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
