"""Partial GNS construction from moments and verification of the resulting operators."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .moment import WordIndex
from .ncalg import Word, enumerate_words, word_count
from .poly import (DivisionResult, MultiPoly, PolyError, UniPoly, classify_min_root, cone_membership,
                   line_coefficients, min_roots, monomials, poly_divide, sphere_points, _as_direction)

SKEW_TOL = 1e-8


class GnsError(ValueError):
    pass


def gram_from_moments(moments: np.ndarray, index: WordIndex, deg: int) -> np.ndarray:
    """``G[u, w] = phi(reverse(w) u)`` over words of degree <= deg."""
    if deg > index.k:
        raise GnsError(f"degree {deg} exceeds the truncation {index.k}")
    words = enumerate_words(index.n, deg)
    return _localized(moments, index, words, ())


def _localized(moments, index, words: Sequence[Word], mid: Word) -> np.ndarray:
    m = len(words)
    if len(moments) != index.num_classes:
        raise GnsError(f"expected {index.num_classes} moments, got {len(moments)}")
    G = np.empty((m, m))
    for a, u in enumerate(words):
        for b, w in enumerate(words):
            G[a, b] = moments[index.class_id(w[::-1] + mid + u)]
    return G


@dataclass
class QuotientBasis:
    W: np.ndarray
    r: int
    eigenvalues: np.ndarray
    P: np.ndarray

    @property
    def kept(self) -> np.ndarray:
        return self.eigenvalues[-self.r:] if self.r else self.eigenvalues[:0]


def quotient_basis(G: np.ndarray, rank_tol: float = 1e-7) -> QuotientBasis:
    """Factor ``G ~ W^T W`` keeping eigenvalues above ``rank_tol * max``."""
    G = 0.5 * (G + G.T)
    lam, P = np.linalg.eigh(G)
    top = lam[-1] if lam.size else 0.0
    if top <= 0.0:
        raise GnsError("Gram matrix has no positive eigenvalue")
    if lam[0] < -10 * rank_tol * top:
        raise GnsError(f"Gram matrix eigenvalue {lam[0]:.3e} is too negative (max {top:.3e})")
    keep = lam > rank_tol * top
    W = np.sqrt(lam[keep])[:, None] * P[:, keep].T
    return QuotientBasis(W, int(keep.sum()), lam, P[:, keep])


@dataclass
class OperatorTuple:
    """Symmetric ``r x r`` matrices ``M_1..M_n`` and the unit-norm residue ``v`` of the empty word."""

    M: list[np.ndarray]
    v: np.ndarray
    W: np.ndarray
    eigenvalues: np.ndarray = field(default_factory=lambda: np.zeros(0))
    skew: float = 0.0

    @property
    def n(self) -> int:
        return len(self.M)

    @property
    def r(self) -> int:
        return self.M[0].shape[0]

    def pencil(self, a) -> np.ndarray:
        return np.tensordot(np.asarray(a, dtype=float), np.array(self.M), axes=1)

    def to_json(self, meta: dict | None = None) -> dict:
        return {"n": self.n, "r": self.r, "M": [Mi.tolist() for Mi in self.M], "v": self.v.tolist(),
                "meta": dict(meta or {})}

    @classmethod
    def from_json(cls, data: dict) -> "OperatorTuple":
        M = [np.array(Mi, dtype=float) for Mi in data["M"]]
        if len(M) != data["n"] or any(Mi.shape != (data["r"], data["r"]) for Mi in M):
            raise GnsError("operator file has inconsistent sizes")
        return cls(M, np.array(data["v"], dtype=float), np.zeros((data["r"], 0)))


def build_operators(moments: np.ndarray, index: WordIndex, basis: QuotientBasis, deg: int) -> OperatorTuple:
    """Compressions ``M_i = pr o (multiplication by z_i)`` in the orthonormal quotient basis."""
    if 2 * deg + 1 > 2 * index.k:
        raise GnsError(f"moments of degree {2 * deg + 1} are needed but only {2 * index.k} are available")
    words = enumerate_words(index.n, deg)
    lam = basis.kept
    P = basis.P
    scale = 1.0 / np.sqrt(lam)
    mats, skew = [], 0.0
    for i in range(1, index.n + 1):
        L = _localized(moments, index, words, (i,))
        Mi = scale[:, None] * (P.T @ L @ P) * scale[None, :]
        nrm = max(np.abs(Mi).max(), 1.0)
        skew = max(skew, float(np.abs(Mi - Mi.T).max() / nrm))
        mats.append(0.5 * (Mi + Mi.T))
    if skew > SKEW_TOL:
        raise GnsError(f"compressed operators have skew part {skew:.2e} > {SKEW_TOL:g}: inconsistent moments")
    v = basis.W[:, 0].copy()
    v /= np.linalg.norm(v)
    return OperatorTuple(mats, v, basis.W, basis.eigenvalues, skew)


def gns(moments: np.ndarray, index: WordIndex, d: int, rank_tol: float = 1e-7) -> OperatorTuple:
    """Gram matrix, quotient and operators on words of degree <= d - 1."""
    G = gram_from_moments(moments, index, d - 1)
    return build_operators(moments, index, quotient_basis(G, rank_tol), d - 1)


# ---------------------------------------------------------------------------
# verification


@dataclass
class RepReport:
    e_identity_residual: float = 0.0
    ch_residual: float = 0.0
    interior_min_eig: float = math.inf
    interior_samples: int = 0
    cone_agreement: float | None = None
    g: MultiPoly | None = None
    f: MultiPoly | None = None
    divide_residual: float | None = None
    divisible: bool | None = None
    determinant_residual: float | None = None
    mismatches: list[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        out = {"e_identity_residual": self.e_identity_residual, "ch_residual": self.ch_residual,
               "interior_min_eig": None if math.isinf(self.interior_min_eig) else self.interior_min_eig,
               "interior_samples": self.interior_samples, "cone_agreement": self.cone_agreement,
               "divide_residual": self.divide_residual, "divisible": self.divisible,
               "determinant_residual": self.determinant_residual,
               "g": None if self.g is None else str(self.g), "f": None if self.f is None else str(self.f)}
        if self.mismatches:
            out["mismatches"] = self.mismatches[:10]
        return out


def _line_matrix(P: Sequence[MultiPoly], A: np.ndarray, a: np.ndarray, v: np.ndarray) -> np.ndarray:
    """``sum_j P_j(a) A^j v`` by Horner's rule."""
    out = np.zeros_like(v)
    for Pj in reversed(P):
        out = A @ out + float(Pj(a)) * v
    return out


def interior_points(h: MultiPoly, e, rng: np.random.Generator, count: int,
                    margin: tuple[float, float] = (0.05, 1.0)) -> np.ndarray:
    """Points ``u - (lambda_min(u) - delta) e`` whose smallest root is ``delta`` in ``margin``."""
    ev = _as_direction(h, e).vector
    u = sphere_points(rng, count, h.nvars)
    lm = min_roots(h, ev, u)
    delta = rng.uniform(*margin, size=count)
    return u - (lm - delta)[:, None] * ev[None, :]


def verify_representation(h: MultiPoly, e, ops: OperatorTuple, samples: int = 200, seed: int = 42,
                          tol: float = 1e-7) -> RepReport:
    """``|e.M - I|``, ``max |h_{a,e}(a.M) v| / (1 + |a|)^d`` and min eig of ``a.M`` at interior points."""
    e = _as_direction(h, e)
    ev = e.vector
    d = h.homogeneous_degree()
    rep = RepReport()
    rep.e_identity_residual = float(np.linalg.norm(ops.pencil(ev) - np.eye(ops.r), 2))
    P = line_coefficients(h, e)
    rng = np.random.default_rng(seed)
    pts = sphere_points(rng, samples, h.nvars) * rng.uniform(0.5, 2.0, size=(samples, 1))
    worst = 0.0
    for a in np.vstack([ev[None], pts]):
        res = np.linalg.norm(_line_matrix(P, ops.pencil(a), a, ops.v))
        worst = max(worst, res / (1.0 + np.linalg.norm(a)) ** d)
    rep.ch_residual = float(worst)
    inner = interior_points(h, ev, rng, samples)
    rep.interior_samples = len(inner)
    rep.interior_min_eig = float(min(np.linalg.eigvalsh(ops.pencil(a))[0] for a in inner))
    return rep


def determinant_poly(ops: OperatorTuple, check_points: int = 50, seed: int = 42, tol: float = 1e-7) -> tuple[MultiPoly, float]:
    """``g = det(x.M)`` by interpolation.

    ``g`` is homogeneous of degree ``r``, so ``g(x_1..x_{n-1}, 1)`` determines
    it.  That polynomial has degree <= r in each variable and is recovered
    exactly from its values on an ``(r+1)^(n-1)`` grid of scaled roots of unity
    by a multidimensional FFT.  The fit is checked at random real points.
    """
    n, r = ops.n, ops.r
    Ms = np.array(ops.M)
    rng = np.random.default_rng(seed)
    test = sphere_points(rng, check_points, n)
    exact = np.array([np.linalg.det(ops.pencil(a)) for a in test])
    last = None
    for rho in (1.0, 0.5, 2.0):
        g = _interpolate(Ms, n, r, rho)
        vals = g(test)
        scale = max(np.abs(exact).max(), g.max_abs_coeff() * 1e-3, 1e-300)
        resid = float(np.abs(vals - exact).max() / scale)
        if resid <= tol:
            return g, resid
        last = resid
    raise GnsError(f"determinant interpolation residual {last:.2e} exceeds {tol:g}")


def _interpolate(Ms: np.ndarray, n: int, r: int, rho: float) -> MultiPoly:
    if n == 1:
        return MultiPoly(1, {(r,): float(np.linalg.det(Ms[0]))})
    m = r + 1
    omega = rho * np.exp(2j * np.pi * np.arange(m) / m)
    grid = np.empty((m,) * (n - 1), dtype=complex)
    for idx in np.ndindex(*grid.shape):
        A = Ms[n - 1].astype(complex)
        for j, t in enumerate(idx):
            A = A + omega[t] * Ms[j]
        grid[idx] = np.linalg.det(A)
    coef = np.fft.fftn(grid) / m ** (n - 1)
    terms = {}
    for beta in np.ndindex(*coef.shape):
        tot = sum(beta)
        if tot > r:
            continue
        c = coef[beta].real / rho ** tot
        terms[tuple(beta) + (r - tot,)] = c
    g = MultiPoly(n, terms)
    big = g.max_abs_coeff()
    return MultiPoly(n, {k: c for k, c in g.terms.items() if abs(c) > 1e-12 * big})


def factor_and_cone_check(h: MultiPoly, e, ops: OperatorTuple, g: MultiPoly | None = None,
                          samples: int = 1000, seed: int = 42, tol: float = 1e-7,
                          report: RepReport | None = None) -> RepReport:
    """Divide ``g`` by ``h`` and compare cone membership on stratified samples.

    40% of the points are interior, 20% have a smallest root within ``10 tol``
    of zero and 40% are outside.  A point agrees when the smallest eigenvalue of
    ``a.M`` and the smallest root of ``h(a - t e)`` get the same verdict.
    """
    e = _as_direction(h, e)
    ev = e.vector
    rep = report or RepReport()
    if g is None:
        g, rep.determinant_residual = determinant_poly(ops, seed=seed)
    rep.g = g
    dq = g.homogeneous_degree() - h.homogeneous_degree()
    if dq < 0:
        raise PolyError(f"deg g = {g.homogeneous_degree()} < deg h")
    nunk = len(monomials(h.nvars, dq))
    div: DivisionResult = poly_divide(g, h, samples=max(200, 4 * nunk), seed=seed)
    rep.f, rep.divide_residual, rep.divisible = div.f, div.residual, div.divisible

    rng = np.random.default_rng(seed)
    n_in = int(round(0.4 * samples))
    n_bd = int(round(0.2 * samples))
    n_out = samples - n_in - n_bd
    u = sphere_points(rng, samples, h.nvars)
    lm = min_roots(h, ev, u)
    shift = np.concatenate([rng.uniform(0.05, 1.0, n_in), rng.uniform(-10 * tol, 10 * tol, n_bd),
                            -rng.uniform(0.05, 1.0, n_out)])
    pts = u - (lm - shift)[:, None] * ev[None, :]
    agree = 0
    for a in pts:
        ch = cone_membership(h, e, a, tol)
        lm_M = float(np.linalg.eigvalsh(ops.pencil(a))[0])
        vm = classify_min_root(lm_M, max(np.linalg.norm(a), 1e-300), tol)
        if ch.verdict is vm:
            agree += 1
        elif len(rep.mismatches) < 10:
            rep.mismatches.append({"a": a.tolist(), "h_verdict": ch.verdict.value, "h_min_root": ch.min_root,
                                   "M_verdict": vm.value, "M_min_eig": lm_M})
    rep.cone_agreement = agree / samples
    return rep


# ---------------------------------------------------------------------------
# Cayley-Hamilton cofactor


@dataclass
class Cofactor:
    """``B(t) = sum_j B[j] t^j`` with ``(tI - A) B(t) = p(t) I``."""

    B: list[np.ndarray]
    residual: float

    def __call__(self, t: float) -> np.ndarray:
        out = np.zeros_like(self.B[0])
        for Bj in reversed(self.B):
            out = out * t + Bj
        return out


def matrix_poly(p: UniPoly, A: np.ndarray) -> np.ndarray:
    out = np.zeros_like(A, dtype=float)
    I = np.eye(A.shape[0])
    for c in reversed(p.coeffs):
        out = out @ A + c * I
    return out


def cayley_hamilton_cofactor(p: UniPoly, A: np.ndarray, tol: float = 1e-8) -> Cofactor:
    """Cofactor from ``p(t + s) = sum_i q_i(s) t^i``: ``B(t) = sum_{i>=1} q_i(A) (tI - A)^(i-1)``."""
    A = np.asarray(A, dtype=float)
    d = p.degree
    if d < 1:
        raise PolyError("need deg p >= 1")
    size = A.shape[0]
    I = np.eye(size)
    nA = max(np.linalg.norm(A, 2), 1.0)
    pscale = sum(abs(c) * nA ** i for i, c in enumerate(p.coeffs))
    pA = matrix_poly(p, A)
    if np.abs(pA).max() > tol * pscale:
        raise PolyError(f"p(A) = {np.abs(pA).max():.2e} is not zero (relative tolerance {tol:g})")
    c = p.array
    B = [np.zeros((size, size)) for _ in range(d)]
    for i in range(1, d + 1):
        # q_i(s) = p^(i)(s) / i!
        qi = UniPoly(np.polynomial.polynomial.polyder(c, i) / math.factorial(i))
        QA = matrix_poly(qi, A)
        # (tI - A)^(i-1) = sum_j C(i-1, j) t^j (-A)^(i-1-j)
        negpow = [I]
        for _ in range(i - 1):
            negpow.append(negpow[-1] @ (-A))
        for j in range(i):
            B[j] += math.comb(i - 1, j) * (QA @ negpow[i - 1 - j])
    return Cofactor(B, cofactor_residual(p, A, B))


def cofactor_residual(p: UniPoly, A: np.ndarray, B: Sequence[np.ndarray]) -> float:
    """Largest coefficient of ``(tI - A) B(t) - p(t) I``, relative to ``max |p_i|``."""
    size = A.shape[0]
    I = np.eye(size)
    d = len(B)
    worst = 0.0
    for j in range(d + 1):
        lhs = (B[j - 1] if j >= 1 else 0.0) - (A @ B[j] if j < d else 0.0)
        pj = p.coeffs[j] if j < len(p.coeffs) else 0.0
        worst = max(worst, float(np.abs(lhs - pj * I).max()))
    return worst / max(np.abs(p.array).max(), 1e-300)


def rank_bound(n: int, d: int) -> int:
    """``(n^d - 1)/(n - 1)``: number of words of degree <= d - 1."""
    return word_count(n, d - 1)
