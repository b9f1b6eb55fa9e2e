#!/usr/bin/env python3
"""Generate the two Hecke eigenforms spanning S_24(SL_2(Z)).

The space is spanned by Delta^2 and Delta*E_12. The eigenvalues of T_2 are
540 +- 12 sqrt(144169), and an eigenform normalized by a(1) = 1 is
b2 + mu*b1 with b1 = Delta^2 = q^2 + ..., b2 = Delta*E_12 scaled to q + ....
Coefficients at primes come from exact convolutions; the rest follow from
Hecke multiplicativity. Harmonic weights are read off the Petersson formula
at (1, 1) and (1, 2), evaluated with mpmath.

Usage: s24_fixtures.py [outdir]   (needs crates/core/fixtures/delta.json)
"""
import json
import math
import sys
from pathlib import Path

import mpmath as mp

K = 24
N = 20000
mp.mp.dps = 60


def primes_upto(n):
    sieve = bytearray([1]) * (n + 1)
    sieve[0:2] = b"\x00\x00"
    for p in range(2, int(n**0.5) + 1):
        if sieve[p]:
            sieve[p * p :: p] = bytearray(len(sieve[p * p :: p]))
    return [p for p in range(n + 1) if sieve[p]]


def sigma11_table(n):
    s = [0] * (n + 1)
    for d in range(1, n + 1):
        d11 = d**11
        for m in range(d, n + 1, d):
            s[m] += d11
    return s


def main(outdir):
    outdir = Path(outdir)
    tau = [0] + json.loads((outdir / "delta.json").read_text())["an"][:N]
    s11 = sigma11_table(N)
    # 691 E_12 = 691 + 65520 sum sigma_11(n) q^n, integral.
    e12 = [691] + [65520 * s11[m] for m in range(1, N + 1)]

    def delta_sq(n):
        return sum(tau[i] * tau[n - i] for i in range(1, n))

    def delta_e12(n):
        # Coefficient of q^n in Delta * 691 E_12, over 691.
        return mp.mpf(sum(tau[i] * e12[n - i] for i in range(1, n + 1))) / 691

    root = mp.sqrt(144169)
    forms = []
    primes = primes_upto(N)
    b1 = {p: mp.mpf(delta_sq(p)) for p in primes}
    b2 = {p: delta_e12(p) for p in primes}
    for sign, tag in ((1, "a"), (-1, "b")):
        eig = 540 + sign * 12 * root
        mu = eig - delta_e12(2)  # a(2) of b2 + mu*b1 equals the eigenvalue
        lam = [mp.mpf(0)] * (N + 1)
        lam[1] = mp.mpf(1)
        half = mp.mpf(K - 1) / 2
        lp = {p: (b2[p] + mu * b1[p]) / mp.power(p, half) for p in primes}
        # lambda(p^j) by the Hecke recursion, then multiplicativity.
        spf = list(range(N + 1))
        for p in primes:
            for m in range(p * p, N + 1, p):
                if spf[m] == m:
                    spf[m] = p
        for n in range(2, N + 1):
            p = spf[n]
            m, e = n, 0
            while m % p == 0:
                m //= p
                e += 1
            pk = [mp.mpf(1), lp[p]]
            for _ in range(2, e + 1):
                pk.append(lp[p] * pk[-1] - pk[-2])
            lam[n] = pk[e] * lam[m]
        forms.append((tag, lam))

    # Petersson at (1, n): omega_a a_a(n) + omega_b a_b(n) = P(1, n).
    def kloosterman(m, n, c):
        return sum(mp.cos(2 * mp.pi * (m * pow(x, -1, c) + n * x) / c) for x in range(1, c + 1) if math.gcd(x, c) == 1) if c > 1 else mp.mpf(1)

    def petersson(n):
        total = mp.mpf(1 if n == 1 else 0)
        s = mp.mpf(0)
        for c in range(1, 120):
            s += kloosterman(1, n, c) / c * mp.besselj(K - 1, 4 * mp.pi * mp.sqrt(n) / c)
        return total + 2 * mp.pi * s  # i^{-24} = 1

    p11, p12 = petersson(1), petersson(2)
    a2a, a2b = forms[0][1][2], forms[1][1][2]
    # omega_a + omega_b = p11; omega_a a2a + omega_b a2b = p12
    wb = (p12 - a2a * p11) / (a2b - a2a)
    wa = p11 - wb
    for (tag, lam), w in zip(forms, (wa, wb)):
        half = mp.mpf(K - 1) / 2
        an = [[float(lam[n] * mp.power(n, half)), 0.0] for n in range(1, N + 1)]
        doc = {
            "label": f"1.24.a.{tag}",
            "weight": K,
            "level": 1,
            "character": {"modulus": 1, "index": 0},
            "an": an,
            "harmonic_weight": float(w),
            "source": "Hecke eigenform in S_24(SL_2(Z)) from Delta^2 and Delta*E_12; "
            "harmonic weight from the Petersson formula at (1,1) and (1,2)",
        }
        fname = f"1.24.a.{tag}.json"
        (outdir / fname).write_text(json.dumps(doc, separators=(",", ":")) + "\n")
        print(fname, "lambda(2) =", mp.nstr(lam[2], 15), "omega =", mp.nstr(w, 15))


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "crates/core/fixtures")
