"""Commutative polynomials: representation, line restriction, roots and cone tests.

A :class:`MultiPoly` is a sparse map from exponent tuples to float
coefficients.  Hyperbolicity is only ever tested probabilistically here:
points are drawn on the unit sphere and the univariate restrictions
``t -> h(a - t e)`` are checked for real-rootedness.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations_with_replacement
from typing import Iterable, Mapping, Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly

PRUNE_REL = 1e-14


class PolyError(ValueError):
    """Invalid polynomial input or an operation outside its preconditions."""


class ParseError(PolyError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class NonHomogeneousError(PolyError):
    def __init__(self, degrees: tuple[int, int]):
        super().__init__(f"polynomial is not homogeneous: terms of degree {degrees[0]} and {degrees[1]}")
        self.degrees = degrees


def monomials(nvars: int, degree: int) -> list[tuple[int, ...]]:
    """Exponent vectors of total degree ``degree``, lexicographically descending."""
    out = []
    for combo in combinations_with_replacement(range(nvars), degree):
        exp = [0] * nvars
        for i in combo:
            exp[i] += 1
        out.append(tuple(exp))
    return out


class MultiPoly:
    """Sparse multivariate polynomial with float coefficients."""

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms: Mapping[tuple[int, ...], float] | None = None):
        if nvars < 1:
            raise PolyError("nvars must be positive")
        self.nvars = nvars
        clean: dict[tuple[int, ...], float] = {}
        if terms:
            for exp, c in terms.items():
                exp = tuple(int(v) for v in exp)
                if len(exp) != nvars or min(exp, default=0) < 0:
                    raise PolyError(f"bad exponent vector {exp} for {nvars} variables")
                c = float(c)
                if c != 0.0:
                    clean[exp] = clean.get(exp, 0.0) + c
            scale = max((abs(c) for c in clean.values()), default=0.0)
            clean = {k: v for k, v in clean.items() if abs(v) > PRUNE_REL * scale}
        self.terms = clean

    # -- constructors -------------------------------------------------
    @classmethod
    def constant(cls, nvars: int, c: float) -> "MultiPoly":
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def variable(cls, nvars: int, i: int) -> "MultiPoly":
        """The coordinate x_{i+1} (``i`` is 0-based)."""
        exp = [0] * nvars
        exp[i] = 1
        return cls(nvars, {tuple(exp): 1.0})

    @classmethod
    def linear(cls, coeffs: Sequence[float]) -> "MultiPoly":
        n = len(coeffs)
        return cls(n, {tuple(int(j == i) for j in range(n)): c for i, c in enumerate(coeffs)})

    # -- queries ------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=-1)

    def homogeneous_degree(self) -> int:
        """Degree of a homogeneous polynomial; raises otherwise."""
        degs = sorted({sum(e) for e in self.terms})
        if len(degs) > 1:
            raise NonHomogeneousError((degs[0], degs[-1]))
        return degs[0] if degs else 0

    def is_homogeneous(self) -> bool:
        return len({sum(e) for e in self.terms}) <= 1

    def max_abs_coeff(self) -> float:
        return max((abs(c) for c in self.terms.values()), default=0.0)

    def coeff(self, exp: Sequence[int]) -> float:
        return self.terms.get(tuple(exp), 0.0)

    def coeff_vector(self, basis: Sequence[tuple[int, ...]]) -> np.ndarray:
        return np.array([self.terms.get(b, 0.0) for b in basis])

    # -- evaluation ---------------------------------------------------
    def __call__(self, points) -> np.ndarray | float:
        """Evaluate at one point (shape (n,)) or many (shape (N, n))."""
        pts = np.asarray(points)
        single = pts.ndim == 1
        pts = np.atleast_2d(pts)
        if pts.shape[1] != self.nvars:
            raise PolyError(f"expected points with {self.nvars} coordinates")
        if not self.terms:
            out = np.zeros(pts.shape[0], dtype=np.result_type(pts.dtype, float))
        else:
            exps = np.array(list(self.terms), dtype=int)
            coeffs = np.array(list(self.terms.values()))
            mons = np.prod(pts[:, None, :] ** exps[None, :, :], axis=2)
            out = mons @ coeffs
        return out[0] if single else out

    # -- arithmetic ---------------------------------------------------
    def _check(self, other: "MultiPoly"):
        if other.nvars != self.nvars:
            raise PolyError("variable count mismatch")

    def __add__(self, other):
        if not isinstance(other, MultiPoly):
            other = MultiPoly.constant(self.nvars, other)
        self._check(other)
        terms = dict(self.terms)
        for e, c in other.terms.items():
            terms[e] = terms.get(e, 0.0) + c
        return MultiPoly(self.nvars, _drop_cancelled(terms, self, other))

    __radd__ = __add__

    def __neg__(self):
        return MultiPoly(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, MultiPoly):
            return MultiPoly(self.nvars, {e: c * other for e, c in self.terms.items()})
        self._check(other)
        terms: dict[tuple[int, ...], float] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                terms[e] = terms.get(e, 0.0) + c1 * c2
        return MultiPoly(self.nvars, terms)

    __rmul__ = __mul__

    def __truediv__(self, scalar: float):
        return self * (1.0 / scalar)

    def __pow__(self, k: int):
        out = MultiPoly.constant(self.nvars, 1.0)
        for _ in range(k):
            out = out * self
        return out

    def allclose(self, other: "MultiPoly", atol: float = 1e-9) -> bool:
        return self.max_coeff_diff(other) <= atol

    def max_coeff_diff(self, other: "MultiPoly") -> float:
        keys = set(self.terms) | set(other.terms)
        return max((abs(self.coeff(k) - other.coeff(k)) for k in keys), default=0.0)

    def __eq__(self, other):
        return isinstance(other, MultiPoly) and self.nvars == other.nvars and self.terms == other.terms

    def __hash__(self):
        return hash((self.nvars, frozenset(self.terms.items())))

    def __repr__(self):
        return f"MultiPoly({self.nvars}, {format_poly(self)!r})"

    def __str__(self):
        return format_poly(self)


def _drop_cancelled(terms, *operands: MultiPoly):
    # cancellation is judged against the operands' scale, not the result's
    scale = max(p.max_abs_coeff() for p in operands)
    return {e: c for e, c in terms.items() if abs(c) > PRUNE_REL * scale}


def format_poly(p: MultiPoly) -> str:
    """Render in the input grammar, e.g. ``x1^2 - 2*x1*x2``."""
    if not p.terms:
        return "0"
    parts = []
    for exp in sorted(p.terms, key=lambda e: (-sum(e), [-v for v in e])):
        c = p.terms[exp]
        mono = "*".join(f"x{i + 1}" + (f"^{k}" if k > 1 else "") for i, k in enumerate(exp) if k)
        mag = abs(c)
        if mono and mag == 1.0:
            body = mono
        else:
            num = repr(mag) if mag != int(mag) or mag >= 1e16 else str(int(mag))
            body = f"{num}*{mono}" if mono else num
        parts.append(("- " if c < 0 else "+ ") + body)
    s = " ".join(parts)
    return s[2:] if s.startswith("+ ") else "-" + s[2:]


_TOKEN = re.compile(r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)|(?P<var>x\d+)|(?P<op>[-+*/^]))")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    toks = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        start = m.start(kind)
        toks.append((kind, m.group(kind), start))
        pos = m.end()
    return toks


def parse_poly(text: str, nvars: int) -> MultiPoly:
    """Parse ``text`` such as ``"x1^2 - x2^2 - 1/2*x3^2"`` into a MultiPoly."""
    toks = _tokenize(text)
    terms: dict[tuple[int, ...], Fraction | float] = {}
    i = 0

    def peek(kind=None, value=None):
        if i >= len(toks):
            return False
        k, v, _ = toks[i]
        return (kind is None or k == kind) and (value is None or v == value)

    def where():
        return toks[i][2] if i < len(toks) else len(text)

    def number(tok: str):
        if re.fullmatch(r"\d+", tok):
            return Fraction(int(tok))
        return Fraction(tok)

    def parse_int():
        nonlocal i
        if not peek("num") or not re.fullmatch(r"\d+", toks[i][1]):
            raise ParseError("expected integer", where())
        v = int(toks[i][1])
        i += 1
        return v

    def parse_factor(exp: list[int]):
        nonlocal i
        _, tok, pos = toks[i]
        idx = int(tok[1:])
        if idx < 1 or idx > nvars:
            raise ParseError(f"variable {tok} out of range 1..{nvars}", pos)
        i += 1
        power = 1
        if peek("op", "^"):
            i += 1
            power = parse_int()
        exp[idx - 1] += power

    def parse_term(sign: int):
        nonlocal i
        coeff: Fraction = Fraction(sign)
        exp = [0] * nvars
        if peek("num"):
            num = number(toks[i][1])
            i += 1
            if peek("op", "/"):
                i += 1
                den = parse_int()
                if den == 0:
                    raise ParseError("division by zero", where())
                num = num / den
            coeff *= num
            if peek("op", "*"):
                i += 1
                if not peek("var"):
                    raise ParseError("expected variable after '*'", where())
            if peek("var"):
                parse_factor(exp)
        elif peek("var"):
            parse_factor(exp)
        else:
            raise ParseError("expected coefficient or variable", where())
        while peek("op", "*"):
            i += 1
            if not peek("var"):
                raise ParseError("expected variable after '*'", where())
            parse_factor(exp)
        key = tuple(exp)
        terms[key] = terms.get(key, Fraction(0)) + coeff

    if not toks:
        raise ParseError("empty polynomial", 0)
    sign = 1
    if peek("op", "-"):
        sign = -1
        i += 1
    parse_term(sign)
    while i < len(toks):
        if peek("op", "+"):
            sign = 1
        elif peek("op", "-"):
            sign = -1
        else:
            raise ParseError(f"unexpected token {toks[i][1]!r}", where())
        i += 1
        parse_term(sign)
    return MultiPoly(nvars, {e: float(c) for e, c in terms.items() if c != 0})


def parse_vector(text: str) -> np.ndarray:
    """Comma-separated decimals, e.g. ``"1,0,0"``."""
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError as exc:
        raise PolyError(f"bad vector {text!r}") from exc


# ---------------------------------------------------------------------------
# univariate polynomials


@dataclass(frozen=True)
class UniPoly:
    """Univariate polynomial, coefficients in ascending degree."""

    coeffs: tuple[float, ...]

    def __init__(self, coeffs: Iterable[float]):
        c = [float(v) for v in coeffs]
        scale = max((abs(v) for v in c), default=0.0)
        while c and abs(c[-1]) <= PRUNE_REL * scale:
            c.pop()
        object.__setattr__(self, "coeffs", tuple(c))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def array(self) -> np.ndarray:
        return np.array(self.coeffs, dtype=float)

    def norm(self) -> float:
        return max((abs(c) for c in self.coeffs), default=0.0)

    def __call__(self, t):
        return npoly.polyval(t, self.array) if self.coeffs else np.zeros_like(np.asarray(t, dtype=float))

    def __add__(self, other: "UniPoly") -> "UniPoly":
        return UniPoly(npoly.polyadd(self.array if self.coeffs else [0.0], other.array if other.coeffs else [0.0]))

    def __sub__(self, other: "UniPoly") -> "UniPoly":
        return self + UniPoly(-other.array)

    def __mul__(self, other) -> "UniPoly":
        if isinstance(other, UniPoly):
            if self.is_zero() or other.is_zero():
                return UniPoly([])
            return UniPoly(npoly.polymul(self.array, other.array))
        return UniPoly(self.array * other)

    __rmul__ = __mul__

    def monic(self) -> "UniPoly":
        if self.is_zero():
            raise PolyError("zero polynomial has no monic normalization")
        return UniPoly(self.array / self.coeffs[-1])


@dataclass(frozen=True)
class Direction:
    """A direction ``e`` together with the value ``h(e)``."""

    e: tuple[float, ...]
    he: float

    @classmethod
    def of(cls, h: MultiPoly, e: Sequence[float]) -> "Direction":
        e = np.asarray(e, dtype=float)
        if e.shape != (h.nvars,):
            raise PolyError(f"direction must have {h.nvars} entries")
        he = float(h(e))
        if abs(he) <= 1e-12 * max(h.max_abs_coeff(), 1e-300):
            raise PolyError(f"h(e) = {he:g} vanishes; not a valid direction")
        return cls(tuple(e), he)

    @property
    def vector(self) -> np.ndarray:
        return np.array(self.e)


def _as_direction(h: MultiPoly, e) -> Direction:
    return e if isinstance(e, Direction) else Direction.of(h, e)


def line_coefficients(h: MultiPoly, e) -> list[MultiPoly]:
    """Polynomials ``P_j(x)`` with ``h(x - t e) = sum_j P_j(x) t^j``.

    ``P_j`` is homogeneous of degree ``d - j``; ``P_d`` is ``(-1)^d h(e)``.
    """
    d = h.homogeneous_degree()
    ev = np.asarray(e.e if isinstance(e, Direction) else e, dtype=float)
    n = h.nvars
    out: list[dict[tuple[int, ...], float]] = [dict() for _ in range(d + 1)]
    for exp, c in h.terms.items():
        # expand prod_i (x_i - t e_i)^{exp_i}: list of (t-power, x-exponent, coeff)
        partial = [(0, (0,) * n, c)]
        for i, m in enumerate(exp):
            if m == 0:
                continue
            nxt = []
            for tp, xe, cc in partial:
                for l in range(m + 1):
                    f = math.comb(m, l) * (-ev[i]) ** l
                    if f == 0.0:
                        continue
                    xe2 = list(xe)
                    xe2[i] += m - l
                    nxt.append((tp + l, tuple(xe2), cc * f))
            partial = nxt
        for tp, xe, cc in partial:
            out[tp][xe] = out[tp].get(xe, 0.0) + cc
    return [MultiPoly(n, t) for t in out]


def restrict_line(h: MultiPoly, a: Sequence[float], e) -> UniPoly:
    """The univariate polynomial ``t -> h(a - t e)``."""
    a = np.asarray(a, dtype=float)
    if a.shape != (h.nvars,):
        raise PolyError(f"point must have {h.nvars} entries")
    return UniPoly([float(P(a)) for P in line_coefficients(h, e)])


def restrict_lines(h: MultiPoly, points: np.ndarray, e) -> np.ndarray:
    """Batch version of :func:`restrict_line`: rows are ascending coefficients."""
    P = line_coefficients(h, e)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    return np.stack([np.broadcast_to(Pj(pts), (pts.shape[0],)) for Pj in P], axis=1)


class RootAccuracyError(PolyError):
    pass


def _root_residual(c: np.ndarray, roots: np.ndarray) -> np.ndarray:
    # normwise backward error |p(r)| / (|c|_1 max(1, |r|)^d); companion eigenvalues are
    # normwise stable, while a componentwise measure blows up at clusters of tiny roots
    scale = np.abs(c).sum() * np.maximum(1.0, np.abs(roots)) ** (len(c) - 1)
    return np.abs(npoly.polyval(roots, c)) / np.maximum(scale, 1e-300)


def univariate_roots(p: UniPoly) -> np.ndarray:
    """All complex roots with multiplicity (companion-matrix eigenvalues)."""
    if p.is_zero():
        raise PolyError("zero polynomial has no roots")
    if p.degree == 0:
        return np.zeros(0, dtype=complex)
    c = p.array
    roots = npoly.polyroots(c).astype(complex)
    res = _root_residual(c, roots)
    if np.any(res > 1e-8):
        dc = npoly.polyder(c)
        for _ in range(3):
            step = npoly.polyval(roots, c) / np.where(npoly.polyval(roots, dc) == 0, 1, npoly.polyval(roots, dc))
            roots = roots - np.where(res > 1e-8, step, 0)
            res = _root_residual(c, roots)
        if np.any(res > 1e-8):
            raise RootAccuracyError(f"root residual {res.max():.2e} exceeds 1e-8")
    return roots


def _complex_mask(roots: np.ndarray, rel: float = 1e-7) -> np.ndarray:
    return np.abs(roots.imag) > rel * (1.0 + np.abs(roots.real))


def sphere_points(rng: np.random.Generator, count: int, n: int) -> np.ndarray:
    x = rng.standard_normal((count, n))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


@dataclass
class HyperbolicityResult:
    verdict: bool
    witness: np.ndarray | None = None
    trials: int = 0

    def __bool__(self):
        return self.verdict


def is_hyperbolic(h: MultiPoly, e, trials: int = 200, seed: int = 42) -> HyperbolicityResult:
    """Randomized necessary test for hyperbolicity of ``h`` in direction ``e``.

    Returns a witness ``a`` whenever some ``h(a - t e)`` has a root with
    imaginary part above ``1e-7 * (1 + |Re|)``.
    """
    h.homogeneous_degree()
    e = _as_direction(h, e)
    rng = np.random.default_rng(seed)
    pts = sphere_points(rng, trials, h.nvars)
    lines = restrict_lines(h, pts, e)
    for k in range(trials):
        roots = univariate_roots(UniPoly(lines[k]))
        if np.any(_complex_mask(roots)):
            return HyperbolicityResult(False, pts[k], k + 1)
    return HyperbolicityResult(True, None, trials)


class ConeVerdict(enum.Enum):
    INTERIOR = "Interior"
    BOUNDARY = "Boundary"
    OUTSIDE = "Outside"
    NOT_HYPERBOLIC = "NotHyperbolicWitness"


@dataclass(frozen=True)
class ConeMembership:
    verdict: ConeVerdict
    min_root: float


def classify_min_root(min_root: float, scale: float, tol: float) -> ConeVerdict:
    """Shared sign classification with tolerance ``tol * scale``."""
    thr = tol * scale
    if min_root > thr:
        return ConeVerdict.INTERIOR
    if min_root >= -thr:
        return ConeVerdict.BOUNDARY
    return ConeVerdict.OUTSIDE


def cone_membership(h: MultiPoly, e, a: Sequence[float], tol: float = 1e-7) -> ConeMembership:
    """Locate ``a`` relative to the hyperbolicity cone of ``h`` in direction ``e``.

    The tolerance is relative to ``|a|`` since roots of ``h(a - t e)`` scale
    linearly with ``a``.
    """
    e = _as_direction(h, e)
    a = np.asarray(a, dtype=float)
    p = restrict_line(h, a, e)
    if p.degree < 1:
        return ConeMembership(ConeVerdict.BOUNDARY, 0.0)
    clusters, bad = _real_clusters(univariate_roots(p))
    if bad is not None:
        return ConeMembership(ConeVerdict.NOT_HYPERBOLIC, bad.real)
    mr = float(min(c for c, _ in clusters))
    return ConeMembership(classify_min_root(mr, max(np.linalg.norm(a), 1e-300), tol), mr)


def min_roots(h: MultiPoly, e, points: np.ndarray) -> np.ndarray:
    """Smallest real part of the roots of ``h(a - t e)`` for each row ``a``."""
    lines = restrict_lines(h, points, e)
    return np.array([univariate_roots(UniPoly(row)).real.min() for row in lines])


# ---------------------------------------------------------------------------
# square-root identity  t = f(t)^2 + q(t) p(t)


def cluster_roots(roots: np.ndarray, rel: float = 1e-3) -> list[tuple[complex, int]]:
    """Group numerically coincident roots; returns ``(mean, multiplicity)`` pairs.

    A root of multiplicity ``m`` is only computed to about ``eps^(1/m)``, so a
    double or triple root may come back as a slightly complex cluster whose
    mean is nevertheless accurate.
    """
    order = np.argsort(roots.real, kind="stable")
    groups: list[list[complex]] = []
    for r in roots[order]:
        for g in groups:
            c = np.mean(g)
            if abs(r - c) <= rel * (1.0 + abs(c)):
                g.append(r)
                break
        else:
            groups.append([r])
    return [(complex(np.mean(g)), len(g)) for g in groups]


def _real_clusters(roots: np.ndarray) -> tuple[list[tuple[float, int]], complex | None]:
    """Real clusters, or the first cluster whose mean is materially complex."""
    out = []
    for c, m in cluster_roots(roots):
        if abs(c.imag) > 1e-7 * (1.0 + abs(c.real)):
            return out, c
        out.append((c.real, m))
    return out, None


def sos_sqrt_identity(p: UniPoly) -> tuple[UniPoly, UniPoly]:
    """Return ``(f, q)`` with ``t = f(t)^2 + q(t) p(t)``.

    ``p`` must have only real, strictly positive roots, each of multiplicity
    at most two.  ``f`` interpolates the square root at the roots (matching
    the derivative at double roots) and ``q`` is the exact quotient.
    """
    if p.degree < 1:
        raise PolyError("need degree >= 1")
    clusters, bad = _real_clusters(univariate_roots(p))
    if bad is not None:
        raise PolyError(f"complex root {bad:.6g}")
    for r, m in clusters:
        if r <= 1e-9:
            raise PolyError(f"nonpositive root {r:.6g}")
        if m > 2:
            raise PolyError(f"root {r:.6g} has multiplicity {m} > 2")
    d = p.degree
    # confluent Vandermonde system for f of degree d-1
    rows, rhs = [], []
    for r, m in clusters:
        rows.append([r**j for j in range(d)])
        rhs.append(math.sqrt(r))
        if m == 2:
            rows.append([j * r ** (j - 1) if j else 0.0 for j in range(d)])
            rhs.append(0.5 / math.sqrt(r))
    fc = np.linalg.solve(np.array(rows), np.array(rhs))
    f = UniPoly(fc)
    target = UniPoly([0.0, 1.0]) - f * f
    if target.is_zero():
        return f, UniPoly([])
    qc, _ = npoly.polydiv(target.array, p.array)
    return f, UniPoly(qc)


def sqrt_identity_residual(p: UniPoly, f: UniPoly, q: UniPoly) -> float:
    diff = UniPoly([0.0, 1.0]) - f * f - q * p
    return diff.norm()


# ---------------------------------------------------------------------------
# division g = f h by sampled least squares


class NonDivisibleError(PolyError):
    pass


@dataclass
class DivisionResult:
    f: MultiPoly
    residual: float
    divisible: bool


def poly_divide(g: MultiPoly, h: MultiPoly, samples: int = 200, seed: int = 42,
                threshold: float = 1e-6) -> DivisionResult:
    """Fit the homogeneous quotient ``f`` with ``g ~ f h``.

    The fit uses ``samples`` random sphere points where ``h`` is not tiny;
    the reported residual is the maximum of ``|g - f h|`` relative to
    ``max |g|`` on a fresh point set.
    """
    if h.is_zero():
        raise PolyError("division by the zero polynomial")
    dg, dh = g.homogeneous_degree(), h.homogeneous_degree()
    if dg < dh:
        raise PolyError(f"deg g = {dg} < deg h = {dh}")
    n = g.nvars
    basis = monomials(n, dg - dh)
    if samples < 2 * len(basis):
        raise PolyError(f"{samples} samples cannot determine {len(basis)} coefficients (need >= {2 * len(basis)})")
    rng = np.random.default_rng(seed)

    def draw(count):
        pts = sphere_points(rng, 3 * count, n)
        hv = h(pts)
        keep = np.abs(hv) > 1e-3 * np.abs(hv).max()
        return pts[keep][:count]

    pts = draw(samples)
    exps = np.array(basis)
    A = np.prod(pts[:, None, :] ** exps[None], axis=2) * h(pts)[:, None]
    coef, *_ = np.linalg.lstsq(A, g(pts), rcond=None)
    f = MultiPoly(n, dict(zip(basis, coef)))
    fresh = draw(samples)
    gv = g(fresh)
    scale = max(np.abs(gv).max(), 1e-300)
    residual = float(np.abs(gv - f(fresh) * h(fresh)).max() / scale)
    return DivisionResult(f, residual, residual <= threshold)
