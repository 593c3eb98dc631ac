"""Noncommutative polynomials in hermitian letters z1..zn.

Words are tuples of 1-based letter indices; the empty tuple is the unit.
Coefficients are real, so the involution just reverses words.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Iterator, Mapping, Sequence

import numpy as np

from .poly import Direction, MultiPoly, PolyError, line_coefficients, monomials

Word = tuple[int, ...]


def reverse(w: Word) -> Word:
    return w[::-1]


def canonical(w: Word) -> Word:
    """Representative of the reversal class of ``w``."""
    r = w[::-1]
    return r if r < w else w


def word_type(w: Word, n: int) -> tuple[int, ...]:
    """Commutative type: the letter multiplicities of ``w``."""
    t = [0] * n
    for l in w:
        t[l - 1] += 1
    return tuple(t)


def word_str(w: Word) -> str:
    return "".join(f"z{l}" for l in w) or "1"


class NcPoly:
    """Real linear combination of words."""

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms: Mapping[Word, float] | None = None):
        self.nvars = nvars
        clean: dict[Word, float] = {}
        for w, c in (terms or {}).items():
            w = tuple(w)
            if any(l < 1 or l > nvars for l in w):
                raise PolyError(f"word {w} uses a letter outside 1..{nvars}")
            if c != 0.0:
                clean[w] = clean.get(w, 0.0) + float(c)
        self.terms = {w: c for w, c in clean.items() if c != 0.0}

    @classmethod
    def word(cls, nvars: int, w: Sequence[int], c: float = 1.0) -> "NcPoly":
        return cls(nvars, {tuple(w): c})

    @classmethod
    def one(cls, nvars: int) -> "NcPoly":
        return cls(nvars, {(): 1.0})

    @property
    def degree(self) -> int:
        return max((len(w) for w in self.terms), default=-1)

    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other: "NcPoly") -> "NcPoly":
        terms = dict(self.terms)
        for w, c in other.terms.items():
            terms[w] = terms.get(w, 0.0) + c
        return NcPoly(self.nvars, terms)

    def __neg__(self) -> "NcPoly":
        return NcPoly(self.nvars, {w: -c for w, c in self.terms.items()})

    def __sub__(self, other: "NcPoly") -> "NcPoly":
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, NcPoly):
            return nc_mul(self, other)
        return NcPoly(self.nvars, {w: c * other for w, c in self.terms.items()})

    def __rmul__(self, scalar):
        return NcPoly(self.nvars, {w: c * scalar for w, c in self.terms.items()})

    def star(self) -> "NcPoly":
        return involution(self)

    def max_coeff_diff(self, other: "NcPoly") -> float:
        keys = set(self.terms) | set(other.terms)
        return max((abs(self.terms.get(k, 0.0) - other.terms.get(k, 0.0)) for k in keys), default=0.0)

    def __eq__(self, other):
        return isinstance(other, NcPoly) and self.nvars == other.nvars and self.terms == other.terms

    def __repr__(self):
        if not self.terms:
            return "NcPoly(0)"
        body = " + ".join(f"{c:g}*{word_str(w)}" for w, c in sorted(self.terms.items(), key=lambda kv: (len(kv[0]), kv[0])))
        return f"NcPoly({body})"


def nc_mul(p: NcPoly, q: NcPoly) -> NcPoly:
    """Bilinear extension of word concatenation."""
    if p.nvars != q.nvars:
        raise PolyError("variable count mismatch")
    terms: dict[Word, float] = {}
    for u, a in p.terms.items():
        for v, b in q.terms.items():
            w = u + v
            terms[w] = terms.get(w, 0.0) + a * b
    return NcPoly(p.nvars, terms)


def involution(p: NcPoly) -> NcPoly:
    return NcPoly(p.nvars, {reverse(w): c for w, c in p.terms.items()})


def enumerate_words(n: int, k: int) -> list[Word]:
    """All words of degree <= k, graded lexicographic (letter 1 < ... < n)."""
    if n < 1 or k < 0:
        raise ValueError("need n >= 1 and k >= 0")
    out: list[Word] = []
    for deg in range(k + 1):
        out.extend(product(range(1, n + 1), repeat=deg))
    return out


def word_count(n: int, k: int) -> int:
    """Closed form for ``len(enumerate_words(n, k))``."""
    return k + 1 if n == 1 else (n ** (k + 1) - 1) // (n - 1)


def multiset_permutations(letters: Sequence[int]) -> Iterator[Word]:
    """Distinct orderings of ``letters`` in lexicographic order."""
    counts: dict[int, int] = {}
    for l in letters:
        counts[l] = counts.get(l, 0) + 1
    keys = sorted(counts)
    total = len(letters)

    def rec(prefix: list[int]):
        if len(prefix) == total:
            yield tuple(prefix)
            return
        for l in keys:
            if counts[l]:
                counts[l] -= 1
                prefix.append(l)
                yield from rec(prefix)
                prefix.pop()
                counts[l] += 1

    yield from rec([])


def commutative_type_sum(alpha: Sequence[int]) -> NcPoly:
    """Sum of all words whose letter multiset is given by ``alpha``."""
    n = len(alpha)
    letters = [i + 1 for i, m in enumerate(alpha) for _ in range(m)]
    return NcPoly(n, {w: 1.0 for w in multiset_permutations(letters)})


def multinomial(alpha: Sequence[int]) -> int:
    out = math.factorial(sum(alpha))
    for m in alpha:
        out //= math.factorial(m)
    return out


@dataclass
class IdealGens:
    """Generators ``q_alpha`` of the ideal together with ``1 - e.z``."""

    gens: dict[tuple[int, ...], NcPoly]
    unit_gen: NcPoly
    degree: int

    def all(self) -> list[NcPoly]:
        return [self.gens[a] for a in sorted(self.gens, reverse=True)] + [self.unit_gen]


def _direction_vector(e) -> np.ndarray:
    return np.asarray(e.e if isinstance(e, Direction) else e, dtype=float)


def ideal_generators(h: MultiPoly, e) -> IdealGens:
    """Coefficients of ``h(a - t e)|_{t = a.z}`` as a polynomial in ``a``.

    Writing ``h(x - t e) = sum_j P_j(x) t^j``, the substitution gives
    ``sum_j P_j(a) (a.z)^j`` and ``(a.z)^j`` is the sum over words ``w`` of
    length ``j`` of ``a^type(w) w``, so the expansion is exact.
    """
    d = h.homogeneous_degree()
    n = h.nvars
    ev = _direction_vector(e)
    P = line_coefficients(h, ev)
    gens: dict[tuple[int, ...], dict[Word, float]] = {a: {} for a in monomials(n, d)}
    for j, Pj in enumerate(P):
        if Pj.is_zero():
            continue
        for w in product(range(1, n + 1), repeat=j):
            tw = word_type(w, n)
            for beta, c in Pj.terms.items():
                alpha = tuple(b + t for b, t in zip(beta, tw))
                gens[alpha][w] = gens[alpha].get(w, 0.0) + c
    unit = {(): 1.0}
    for i, ei in enumerate(ev):
        if ei != 0.0:
            unit[(i + 1,)] = -ei
    return IdealGens({a: NcPoly(n, t) for a, t in gens.items()}, NcPoly(n, unit), d)


def line_element(h: MultiPoly, e, a: Sequence[float]) -> NcPoly:
    """``h_{a,e}(a.z)`` computed directly by powering ``a.z`` (an oracle for the generators)."""
    n = h.nvars
    a = np.asarray(a, dtype=float)
    P = line_coefficients(h, e)
    az = NcPoly(n, {(i + 1,): float(ai) for i, ai in enumerate(a) if ai != 0.0})
    power = NcPoly.one(n)
    out = NcPoly(n)
    for Pj in P:
        out = out + power * float(Pj(a))
        power = power * az
    return out


def evaluate_generators(gens: IdealGens, a: Sequence[float]) -> NcPoly:
    """``sum_alpha q_alpha a^alpha``."""
    a = np.asarray(a, dtype=float)
    out = NcPoly(len(a))
    for alpha, q in gens.gens.items():
        out = out + q * float(np.prod(a ** np.array(alpha)))
    return out


def evaluate_word(w: Word, mats: Sequence[np.ndarray]) -> np.ndarray:
    """Matrix of ``w`` under ``z_i -> mats[i-1]``."""
    out = np.eye(mats[0].shape[0])
    for l in w:
        out = out @ mats[l - 1]
    return out
