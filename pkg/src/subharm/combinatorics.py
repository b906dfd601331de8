"""Moebius function, Witt's necklace count, Lyndon words and necklace canonical forms."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

DEFAULT_ALPHABET = "abcdefghijklmnopqrstuvwxyz"


class TooLarge(ValueError):
    pass


def moebius(l: int) -> int:
    if l < 1:
        raise ValueError("moebius is defined for positive integers")
    result = 1
    n = l
    p = 2
    while p * p <= n:
        if n % p == 0:
            n //= p
            if n % p == 0:
                return 0
            result = -result
        p += 1 if p == 2 else 2
    if n > 1:
        result = -result
    return result


def divisors(k: int) -> list[int]:
    small, large = [], []
    d = 1
    while d * d <= k:
        if k % d == 0:
            small.append(d)
            if d * d != k:
                large.append(k // d)
        d += 1
    return small + large[::-1]


def witt_count(n: int, k: int) -> int:
    """Number of aperiodic necklaces (Lyndon words) of length k over n letters."""
    if n < 1 or k < 1:
        raise ValueError("need n >= 1 and k >= 1")
    total = sum(moebius(l) * n ** (k // l) for l in divisors(k))
    if total % k:
        raise ArithmeticError(f"Witt sum {total} not divisible by {k}")
    return total // k


def lyndon_words(n: int, k: int, alphabet: Optional[Sequence] = None, limit: int = 10**7) -> list:
    """All Lyndon words of length exactly k over n letters, in lexicographic order.

    Duval's generation of the Lyndon words of length <= k, keeping those of
    length k.  Words are strings over ``alphabet`` (default a, b, c, ...) or
    tuples of ints when ``alphabet`` is ``int``.
    """
    if n < 1 or k < 1:
        raise ValueError("need n >= 1 and k >= 1")
    if n ** k > limit:
        raise TooLarge(f"{n}^{k} words exceed the enumeration limit {limit}")
    if alphabet is None:
        if n > len(DEFAULT_ALPHABET):
            alphabet = int
        else:
            alphabet = DEFAULT_ALPHABET[:n]
    out = []
    w = [-1]
    while w:
        w[-1] += 1
        if len(w) == k:
            out.append(tuple(w))
        m = len(w)
        while len(w) < k:
            w.append(w[len(w) - m])
        while w and w[-1] == n - 1:
            w.pop()
    if alphabet is int:
        return out
    return ["".join(alphabet[c] for c in word) for word in out]


def least_rotation_index(s: Sequence) -> int:
    """Booth's algorithm: start index of the lexicographically least rotation."""
    s2 = list(s) + list(s)
    n = len(s2)
    f = [-1] * n
    k = 0
    for j in range(1, n):
        sj = s2[j]
        i = f[j - k - 1]
        while i != -1 and sj != s2[k + i + 1]:
            if sj < s2[k + i + 1]:
                k = j - i - 1
            i = f[i]
        if sj != s2[k + i + 1]:
            if sj < s2[k]:
                k = j
            f[j - k] = -1
        else:
            f[j - k] = i + 1
    return k % len(s)


def smallest_period(s: Sequence) -> int:
    """Smallest p dividing len(s) with s invariant under rotation by p."""
    n = len(s)
    for p in divisors(n):
        if all(s[i] == s[(i + p) % n] for i in range(n)):
            return p
    return n


def canonical_necklace(s):
    """Least rotation of ``s`` and whether ``s`` is aperiodic.

    Works for strings and tuples; returns the same type it was given.
    """
    if len(s) == 0:
        raise ValueError("empty word")
    i = least_rotation_index(s)
    rot = s[i:] + s[:i]
    return rot, smallest_period(s) == len(s)


def block_rotations(bits: Sequence[int], block: int) -> list[tuple]:
    """Rotations of ``bits`` by multiples of ``block`` (one T-shift moves m hump bits)."""
    n = len(bits)
    if n % block:
        raise ValueError("length must be a multiple of the block size")
    b = tuple(bits)
    return [b[j:] + b[:j] for j in range(0, n, block)]


def bits_to_letters(bits: Sequence[int], m: int) -> tuple[int, ...]:
    """Group a km-bit string into k letters of the 2^m-ary alphabet (first bit most significant)."""
    if len(bits) % m:
        raise ValueError("length must be a multiple of m")
    out = []
    for j in range(0, len(bits), m):
        v = 0
        for b in bits[j:j + m]:
            v = 2 * v + int(b)
        out.append(v)
    return tuple(out)


def predicted_subharmonic_count(m: int, k: int) -> int:
    """Lower bound S_{2^m}(k) on subharmonic periodicity classes of order k."""
    if m < 1 or k < 2:
        raise ValueError("need m >= 1 and k >= 2")
    return witt_count(2 ** m, k)


@dataclass
class NecklaceTable:
    n: int
    k: int
    count: int
    words: list = field(default_factory=list)

    @classmethod
    def build(cls, n: int, k: int, enumerate_words: bool = True, limit: int = 10**5) -> "NecklaceTable":
        words = lyndon_words(n, k) if enumerate_words and n ** k <= limit else []
        return cls(n, k, witt_count(n, k), words)
