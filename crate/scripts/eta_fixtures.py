#!/usr/bin/env python3
"""Regenerate the coefficient fixtures in crates/core/fixtures.

Each shipped form is a one-dimensional space spanned by an eta quotient, so
its Fourier coefficients follow from exact integer power-series products.
Products of eta(dz) use the sparse expansions
    prod (1 - q^n)   = sum_j (-1)^j q^{j(3j-1)/2}          (pentagonal)
    prod (1 - q^n)^3 = sum_j (-1)^j (2j+1) q^{j(j+1)/2}     (Jacobi)
so each factor costs O(N sqrt N) exact integer operations.
"""
import json
import sys
from pathlib import Path

import numpy as np


def sparse_factor(d, n, cube):
    out = {}
    j = 0
    if cube:
        while d * j * (j + 1) // 2 <= n:
            out[d * j * (j + 1) // 2] = (-1) ** j * (2 * j + 1)
            j += 1
        return out
    while True:
        hit = False
        for jj in ([0] if j == 0 else [j, -j]):
            e = d * jj * (3 * jj - 1) // 2
            if e <= n:
                out[e] = (-1) ** jj
                hit = True
        if not hit and j > 0:
            return out
        j += 1


def eta_quotient(factors, n):
    """Coefficients of q^shift * prod eta(dz)^r / q^{...}, i.e. lambda(1..n)."""
    shift = sum(d * r for d, r in factors)
    assert shift % 24 == 0, "only integral q-orders supported"
    shift //= 24
    c = np.zeros(n + 1, dtype=object)
    c[0] = 1
    for d, r in factors:
        for cube in [True] * (r // 3) + [False] * (r % 3):
            new = np.zeros_like(c)
            for e, v in sparse_factor(d, n, cube).items():
                new[e:] += v * c[: n + 1 - e]
            c = new
    return [int(c[m - shift]) if m >= shift else 0 for m in range(1, n + 1)]


FORMS = [
    # file, label, weight, level, character index, eta factors, N
    ("delta.json", "1.12.a.a", 12, 1, 0, [(1, 24)], 20000),
    ("5.4.a.a.json", "5.4.a.a", 4, 5, 0, [(1, 4), (5, 4)], 200000),
    ("2.8.a.a.json", "2.8.a.a", 8, 2, 0, [(1, 8), (2, 8)], 20000),
    ("3.6.a.a.json", "3.6.a.a", 6, 3, 0, [(1, 6), (3, 6)], 20000),
    ("4.5.b.a.json", "4.5.b.a", 5, 4, 1, [(1, 4), (2, 2), (4, 4)], 20000),
]


def main(outdir):
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    for fname, label, k, level, idx, factors, n in FORMS:
        an = eta_quotient(factors, n)
        eta = " ".join(f"eta({d}z)^{r}" if d > 1 else f"eta(z)^{r}" for d, r in factors)
        doc = {
            "label": label,
            "weight": k,
            "level": level,
            "character": {"modulus": level, "index": idx},
            "an": an,
            "source": f"LMFDB newform {label}; q-expansion of the eta quotient {eta}",
        }
        (outdir / fname).write_text(json.dumps(doc, separators=(",", ":")) + "\n")
        print(fname, an[:8])


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "crates/core/fixtures")
