"""Newton sums, Hermite matrices and the trace coefficients of a hyperbolic polynomial."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from . import sdp
from .poly import MultiPoly, PolyError, UniPoly, line_coefficients, monomials


def _newton_recursion(c, d, K, zero, one):
    """Power sums from the coefficients of ``t^d + c[1] t^(d-1) + ... + c[d]``.

    Works for any coefficient ring supporting ``+`` and ``*`` (floats or
    :class:`MultiPoly`), which is what lets the multivariate Hermite matrix
    reuse it.
    """
    N = [one * d]
    for k in range(1, K + 1):
        acc = zero
        for j in range(1, min(k, d + 1)):
            acc = acc + c[j] * N[k - j]
        if k <= d:
            acc = acc + c[k] * k
        N.append(acc * -1)
    return N


def newton_sums(p: UniPoly, K: int) -> list[float]:
    """``N_0..N_K`` of ``p`` via Newton's identities (no root extraction)."""
    if p.is_zero():
        raise PolyError("zero polynomial")
    if p.degree < 1:
        raise PolyError("Newton sums need degree >= 1")
    m = p.monic().coeffs
    d = p.degree
    c = [1.0] + [m[d - j] for j in range(1, d + 1)]
    return [float(v) for v in _newton_recursion(c, d, K, 0.0, 1.0)]


def hermite_univariate(p: UniPoly) -> np.ndarray:
    """Hankel matrix ``(N_{i+j})`` of size ``deg p``."""
    d = p.degree
    N = newton_sums(p, 2 * d - 2)
    return np.array([[N[i + j] for j in range(d)] for i in range(d)])


@dataclass
class HermiteMatrix:
    """Hermite matrix of ``h(x - t e)`` with polynomial entries in ``x``."""

    entries: list[list[MultiPoly]]

    @property
    def size(self) -> int:
        return len(self.entries)

    @property
    def nvars(self) -> int:
        return self.entries[0][0].nvars

    def __call__(self, a) -> np.ndarray:
        a = np.asarray(a, dtype=float)
        return np.array([[float(e(a)) for e in row] for row in self.entries])

    def to_strings(self) -> list[list[str]]:
        return [[str(e) for e in row] for row in self.entries]

    def norm(self) -> float:
        return max(e.max_abs_coeff() for row in self.entries for e in row)


def _symbolic_newton(h: MultiPoly, e, K: int) -> list[MultiPoly]:
    d = h.homogeneous_degree()
    P = line_coefficients(h, e)
    lead = P[d].coeff((0,) * h.nvars)
    n = h.nvars
    c = [MultiPoly.constant(n, 1.0)] + [P[d - j] / lead for j in range(1, d + 1)]
    return _newton_recursion(c, d, K, MultiPoly(n), MultiPoly.constant(n, 1.0))


def hermite_multivariate(h: MultiPoly, e) -> HermiteMatrix:
    """Entry ``(i, j)`` is the Newton sum ``N_{i+j}`` of ``t -> h(x - t e)``, a form of degree ``i+j``."""
    d = h.homogeneous_degree()
    if d < 1:
        raise PolyError("need deg h >= 1")
    N = _symbolic_newton(h, e, 2 * d - 2)
    return HermiteMatrix([[N[i + j] for j in range(d)] for i in range(d)])


@dataclass
class NewtonCoeffs:
    K: int
    values: dict[tuple[int, ...], float]

    def __getitem__(self, alpha) -> float:
        return self.values[tuple(alpha)]


def trace_coefficients(h: MultiPoly, e, K: int | None = None) -> NewtonCoeffs:
    """Coefficients ``c_alpha`` with ``N_k(h(a - t e)) = sum_{|alpha|=k} c_alpha a^alpha``.

    ``K`` defaults to ``2 deg h``.  Every alpha with ``|alpha| <= K`` is
    present, zeros included.
    """
    d = h.homogeneous_degree()
    K = 2 * d if K is None else K
    if K < 0:
        raise ValueError("K must be >= 0")
    N = _symbolic_newton(h, e, K)
    values = {}
    for k in range(K + 1):
        for alpha in monomials(h.nvars, k):
            values[alpha] = N[k].coeff(alpha)
    return NewtonCoeffs(K, values)


# ---------------------------------------------------------------------------
# matrix sums of squares


class NotFound(Exception):
    """No Gram certificate at the requested tolerance."""

    def __init__(self, message: str, result: sdp.SdpResult | None = None):
        super().__init__(message)
        self.result = result


@dataclass
class HermiteSos:
    gram: np.ndarray
    basis: list[tuple[int, tuple[int, ...]]]
    residual: float
    result: sdp.SdpResult

    def reconstruct(self, nvars: int, size: int) -> list[list[MultiPoly]]:
        """``Z(x)^T Q Z(x)`` entrywise."""
        out = [[MultiPoly(nvars) for _ in range(size)] for _ in range(size)]
        terms: dict[tuple[int, int], dict] = {}
        for p, (i, bi) in enumerate(self.basis):
            for q, (j, bj) in enumerate(self.basis):
                exp = tuple(u + v for u, v in zip(bi, bj))
                t = terms.setdefault((i, j), {})
                t[exp] = t.get(exp, 0.0) + self.gram[p, q]
        for (i, j), t in terms.items():
            out[i][j] = MultiPoly(nvars, t)
        return out


def hermite_sos(H: HermiteMatrix, tol: float = sdp.DEFAULT_TOL, max_iter: int = sdp.DEFAULT_MAX_ITER) -> HermiteSos:
    """Find ``Q`` psd with ``H(x) = Z(x)^T Q Z(x)``.

    Column ``i`` of ``Z`` carries the monomials of degree exactly ``i``, which
    matches the homogeneity of entry ``(i, j)``.
    """
    d, n = H.size, H.nvars
    basis = [(i, mono) for i in range(d) for mono in monomials(n, i)]
    pos = {b: k for k, b in enumerate(basis)}
    size = len(basis)
    constraints = []
    for i in range(d):
        for j in range(i, d):
            pairs: dict[tuple[int, ...], list[tuple[int, int]]] = {}
            for bi, bj in product(monomials(n, i), monomials(n, j)):
                exp = tuple(u + v for u, v in zip(bi, bj))
                pairs.setdefault(exp, []).append((pos[(i, bi)], pos[(j, bj)]))
            for exp in monomials(n, i + j):
                E = np.zeros((size, size))
                for p, q in pairs.get(exp, []):
                    E[p, q] += 1.0
                S = E if i == j else 0.5 * (E + E.T)
                constraints.append(([S], H.entries[i][j].coeff(exp)))
    problem = sdp.SdpProblem.from_constraints([size], constraints)
    res = sdp.solve(problem, tol=tol, max_iter=max_iter, mode="lambda_min")
    Q = res.X[0]
    out = HermiteSos(Q, basis, 0.0, res)
    recon = out.reconstruct(n, d)
    out.residual = max(recon[i][j].max_coeff_diff(H.entries[i][j]) for i in range(d) for j in range(i, d))
    if res.status is not sdp.Status.FEASIBLE:
        raise NotFound(f"Gram program {res.status.value}: {res.message}", res)
    if out.residual > 1e-7 * (1 + H.norm()):
        raise NotFound(f"coefficient residual {out.residual:.2e} too large", res)
    return out
