"""Enumeration oracles shared by the test modules."""
from collections import Counter
from fractions import Fraction
import math


def set_partitions(n):
    """Every set partition of {0..n-1} as a list of block-size lists (restricted growth strings)."""
    out = []

    def rec(i, labels, k):
        if i == n:
            out.append(list(Counter(labels).values()))
            return
        for j in range(k + 1):
            labels.append(j)
            rec(i + 1, labels, max(k, j + 1))
            labels.pop()

    rec(0, [], 0)
    return out


def eppf_direct(alpha, theta, sizes):
    """EPPF as the literal product formula, evaluated in Fractions."""
    a, t = Fraction(alpha), Fraction(theta)
    n, k = sum(sizes), len(sizes)
    num = Fraction(1)
    for i in range(1, k):
        num *= t + i * a
    den = Fraction(1)
    for i in range(1, n):
        den *= t + i
    prod = Fraction(1)
    for s in sizes:
        for j in range(1, s):
            prod *= j - a
    return num / den * prod


def rising(x, u):
    out = 1
    for i in range(u):
        out *= x + i
    return out


def gen_factorial_exact(u, v, a, b):
    """C(u, v; a, b) from the alternating sum with exact rationals."""
    a, b = Fraction(a), Fraction(b)
    tot = sum((-1) ** j * math.comb(v, j) * rising(-j * a - b, u) for j in range(v + 1))
    return tot / math.factorial(v)
