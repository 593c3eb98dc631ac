"""The feasibility program F(h, e): a real symmetric functional on words of degree <= 2k.

The functional ``phi`` is positive on hermitian squares (PSD moment matrix),
vanishes on the two-sided ideal generated by the ``q_alpha`` and ``1 - e.z``,
and is normalized at the empty word.

Internally one letter ``z_s`` (the one with the largest ``|e_s|``) is
eliminated through ``z_s = (1 - sum_{j != s} e_j z_j) / e_s``.  This map is an
algebra homomorphism that commutes with word reversal, so every constraint of
the form ``phi(p (1 - e.z) q) = 0`` holds identically and ``phi`` is determined
by its values on words in the remaining letters.  The remaining ideal
constraints ``phi(p' psi(q_alpha) q') = 0`` over reduced words span exactly the
same space as the literal ones.  The literal constraint set is still available
through :func:`literal_residuals` for verification.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from . import sdp
from .hermite import trace_coefficients
from .ncalg import (NcPoly, Word, canonical, commutative_type_sum, enumerate_words, ideal_generators,
                    word_count)
from .poly import Direction, MultiPoly, PolyError, sphere_points

log = logging.getLogger(__name__)

PLAIN = "plain"
TRACE = "trace"


def truncation_level(d: int) -> int:
    """``max(2(d-1), d+1)``: large enough that products of degree ``2(d+1)`` are defined."""
    if d < 1:
        raise ValueError("degree must be >= 1")
    return max(2 * (d - 1), d + 1)


def certified_level(d: int) -> int:
    """``2(d-1)``: the truncation at which infeasibility certifies ``-1`` as a sum of hermitian squares."""
    return 2 * (d - 1)


def spectral_bound(h: MultiPoly, e, samples: int = 2000, seed: int = 42, margin: float = 0.1) -> float:
    """``(1 + margin)`` times the largest root modulus of ``h(a - t e)`` over sampled unit ``a``.

    Coordinate axes and their negatives are always included.
    """
    n = h.nvars
    rng = np.random.default_rng(seed)
    pts = np.vstack([np.eye(n), -np.eye(n), sphere_points(rng, samples, n)])
    from .poly import UniPoly, restrict_lines, univariate_roots
    lines = restrict_lines(h, pts, e)
    rmax = max(np.abs(univariate_roots(UniPoly(row))).max() for row in lines)
    return float((1.0 + margin) * rmax)


# ---------------------------------------------------------------------------
# word bookkeeping


class WordIndex:
    """Words of degree <= k (matrix index) and reversal classes of words of degree <= 2k.

    Class ids follow graded-lex order of the class representative (the
    lexicographically smaller of ``w`` and its reversal); id 0 is the empty word.
    """

    def __init__(self, n: int, k: int):
        if n < 1 or k < 0:
            raise ValueError("need n >= 1, k >= 0")
        self.n, self.k = n, k
        self.words: list[Word] = enumerate_words(n, k)
        all_words = enumerate_words(n, 2 * k)
        self.class_of: dict[Word, int] = {}
        self.classes: list[Word] = []
        ids = np.empty(len(all_words), dtype=np.int64)
        for i, w in enumerate(all_words):
            c = canonical(w)
            cid = self.class_of.get(c)
            if cid is None:
                cid = self.class_of[c] = len(self.classes)
                self.classes.append(c)
            ids[i] = cid
        self.word_class = ids
        self.offsets = np.array([word_count(n, s - 1) if s > 0 else 0 for s in range(2 * k + 2)])

    @property
    def size(self) -> int:
        return len(self.words)

    @property
    def num_classes(self) -> int:
        return len(self.classes)

    def class_id(self, w: Sequence[int]) -> int:
        return self.class_of[canonical(tuple(w))]

    def word_id(self, w: Sequence[int]) -> int:
        """Position of ``w`` in the graded-lex list of words of degree <= 2k."""
        v = 0
        for l in w:
            v = v * self.n + (l - 1)
        return int(self.offsets[len(w)] + v)

    def pair_ids(self, deg: int | None = None) -> np.ndarray:
        """Word ids of ``reverse(u) + w`` for matrix words ``u, w`` of degree <= deg."""
        deg = self.k if deg is None else deg
        words = self.words[:word_count(self.n, deg)]
        ids = np.empty((len(words), len(words)), dtype=np.int64)
        for a, u in enumerate(words):
            ru = u[::-1]
            for b, w in enumerate(words):
                ids[a, b] = self.word_id(ru + w)
        return ids


def _word_values(n: int, deg: int) -> tuple[np.ndarray, np.ndarray]:
    """Degree and base-n value of each word of degree <= deg (graded lex)."""
    degs, vals = [], []
    for s in range(deg + 1):
        degs.append(np.full(n ** s, s))
        vals.append(np.arange(n ** s))
    return np.concatenate(degs), np.concatenate(vals)


# ---------------------------------------------------------------------------
# elimination of one letter


@dataclass
class Reduction:
    """Expresses words of degree <= 2k as combinations of reduced words (no letter ``s``)."""

    letter: int
    letters: list[int]
    red_words: list[Word]
    red_index: dict[Word, int]
    red_class: np.ndarray
    red_classes: list[Word]
    V: np.ndarray  # (full words, reduced classes)
    e: np.ndarray

    @property
    def num_classes(self) -> int:
        return len(self.red_classes)

    def vector(self, p: NcPoly, index: WordIndex) -> np.ndarray:
        out = np.zeros(self.num_classes)
        for w, c in p.terms.items():
            out += c * self.V[index.word_id(w)]
        return out


def _reduce(index: WordIndex, e: np.ndarray) -> Reduction:
    n, K = index.n, 2 * index.k
    s = int(np.argmax(np.abs(e))) + 1
    letters = [l for l in range(1, n + 1) if l != s]
    nr = len(letters)
    red_words = [()] + [w for deg in range(1, K + 1) for w in _products(letters, deg)] if nr else [()]
    red_index = {w: i for i, w in enumerate(red_words)}
    red_classes: list[Word] = []
    cls_of: dict[Word, int] = {}
    red_class = np.empty(len(red_words), dtype=np.int64)
    for i, w in enumerate(red_words):
        c = canonical(w)
        if c not in cls_of:
            cls_of[c] = len(red_classes)
            red_classes.append(c)
        red_class[i] = cls_of[c]
    R = len(red_words)
    # append maps: index of w + l, -1 when the degree would exceed K
    app = np.full((nr, R), -1, dtype=np.int64)
    for i, w in enumerate(red_words):
        if len(w) < K:
            for j, l in enumerate(letters):
                app[j, i] = red_index[w + (l,)]

    def shift(Vs, j):
        out = np.zeros_like(Vs)
        ok = app[j] >= 0
        out[:, app[j][ok]] = Vs[:, ok]
        return out

    levels = [np.zeros((1, R))]
    levels[0][0, 0] = 1.0
    for deg in range(K):
        Vs = levels[-1]
        sh = [shift(Vs, j) for j in range(nr)]
        nxt = np.empty((Vs.shape[0], n, R))
        for l in range(1, n + 1):
            if l == s:
                acc = Vs.copy()
                for j, lj in enumerate(letters):
                    if e[lj - 1] != 0.0:
                        acc -= e[lj - 1] * sh[j]
                nxt[:, l - 1] = acc / e[s - 1]
            else:
                nxt[:, l - 1] = sh[letters.index(l)]
        levels.append(nxt.reshape(-1, R))
    Vw = np.vstack(levels)
    V = np.zeros((Vw.shape[0], len(red_classes)))
    for i in range(R):
        V[:, red_class[i]] += Vw[:, i]
    return Reduction(s, letters, red_words, red_index, red_class, red_classes, V, e)


def _products(letters, deg):
    if deg == 0:
        yield ()
        return
    for w in _products(letters, deg - 1):
        for l in letters:
            yield w + (l,)


# ---------------------------------------------------------------------------
# the program


@dataclass
class LinearSystem:
    """Deduplicated linear constraints on the reduced classes."""

    rows: np.ndarray
    rhs: np.ndarray
    kinds: list[str]

    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for k in self.kinds:
            out[k] = out.get(k, 0) + 1
        return out


@dataclass
class MomentProgram:
    """Moment program ``F(h, e)`` at truncation ``k``.

    ``problem`` is the canonical SDP over the full moment matrix (size = number
    of words of degree <= k) plus a diagonal block of boundedness slacks.  Its
    dual variables are the free moment classes listed in ``free_classes``
    followed by the shift ``lambda``.
    """

    h: MultiPoly
    e: Direction
    index: WordIndex
    k: int
    mode: str
    R: float
    problem: sdp.SdpProblem
    reduction: Reduction
    system: LinearSystem
    y0: np.ndarray
    N: np.ndarray
    free_classes: list[int]
    bounds: np.ndarray
    M0: np.ndarray
    Mj: np.ndarray
    consistent: bool = True
    warnings: list[str] = field(default_factory=list)

    @property
    def num_free(self) -> int:
        return self.N.shape[1]

    @property
    def size(self) -> int:
        return self.index.size

    @property
    def unit_value(self) -> float:
        return float(self.h.homogeneous_degree()) if self.mode == TRACE else 1.0

    def free_words(self) -> list[Word]:
        return [self.reduction.red_classes[c] for c in self.free_classes]

    def moments(self, x: np.ndarray) -> np.ndarray:
        """Values on all classes of words of degree <= 2k for free parameters ``x``."""
        yr = self.y0 + self.N @ x
        reps = np.array([self.index.word_id(w) for w in self.index.classes], dtype=np.int64)
        return self.reduction.V[reps] @ yr

    def moment_matrix(self, x: np.ndarray) -> np.ndarray:
        return self.M0 + np.tensordot(x, self.Mj, axes=1) if self.num_free else self.M0.copy()

    def summary(self) -> dict:
        return {"k": self.k, "mode": self.mode, "R": self.R, "moment_block": self.size,
                "classes": self.index.num_classes, "reduced_classes": self.reduction.num_classes,
                "eliminated_letter": self.reduction.letter, "constraints": self.system.counts(),
                "constraint_rows": int(self.system.rows.shape[0]), "free_variables": self.num_free,
                "literal_ideal_constraints": literal_constraint_count(self)}


def _ideal_rows(red: Reduction, index: WordIndex, gens, K: int) -> list[np.ndarray]:
    """Rows ``p' psi(g) q'`` over reduced words with ``deg p' + deg g + deg q' <= K``."""
    rows = []
    for g in gens:
        dg = g.degree
        # psi(g) as a combination of reduced words (not classes)
        terms: dict[Word, float] = {}
        for w, c in g.terms.items():
            vec = _word_vector(red, index, w)
            for rw, v in vec.items():
                terms[rw] = terms.get(rw, 0.0) + c * v
        terms = {w: c for w, c in terms.items() if abs(c) > 1e-13}
        if not terms:
            continue
        budget = K - dg
        if budget < 0:
            continue
        short = [w for w in red.red_words if len(w) <= budget]
        for p in short:
            for q in short:
                if len(p) + len(q) > budget:
                    continue
                row = np.zeros(red.num_classes)
                for w, c in terms.items():
                    row[red.red_class[red.red_index[p + w + q]]] += c
                rows.append(row)
    return rows


def _word_vector(red: Reduction, index: WordIndex, w: Word) -> dict[Word, float]:
    """``psi(w)`` over reduced words, by direct expansion."""
    out: dict[Word, float] = {(): 1.0}
    s = red.letter
    e = red.e
    for l in w:
        nxt: dict[Word, float] = {}
        if l == s:
            for u, c in out.items():
                nxt[u] = nxt.get(u, 0.0) + c / e[s - 1]
                for lj in red.letters:
                    if e[lj - 1] != 0.0:
                        nxt[u + (lj,)] = nxt.get(u + (lj,), 0.0) - c * e[lj - 1] / e[s - 1]
        else:
            for u, c in out.items():
                nxt[u + (l,)] = nxt.get(u + (l,), 0.0) + c
        out = nxt
    return out


def _dedup(rows: list[np.ndarray], rhs: list[float], kinds: list[str]) -> LinearSystem:
    seen: dict[bytes, int] = {}
    R, B, Kd = [], [], []
    for row, b, kind in zip(rows, rhs, kinds):
        scale = np.abs(row).max(initial=0.0)
        if scale == 0.0:
            if abs(b) > 1e-12:
                R.append(row), B.append(b), Kd.append(kind)
            continue
        nz = np.flatnonzero(np.abs(row) > 1e-13 * scale)
        lead = row[nz[0]]
        key = np.round(np.concatenate([row / lead, [b / lead]]), 12).tobytes()
        if key in seen:
            continue
        seen[key] = len(R)
        R.append(row), B.append(b), Kd.append(kind)
    ncols = rows[0].size if rows else 0
    return LinearSystem(np.array(R).reshape(len(R), ncols), np.array(B, dtype=float), Kd)


def _parametrize(system: LinearSystem, ncols: int, rank_tol: float = 1e-10):
    """``y = y0 + N x`` over the free (non-pivot) classes, via pivoted QR."""
    A, b = system.rows, system.rhs
    if A.shape[0] == 0:
        return np.zeros(ncols), np.eye(ncols), list(range(ncols)), 0.0
    Q, Rm, piv = sla.qr(A, mode="economic", pivoting=True)
    diag = np.abs(np.diag(Rm))
    rank = int(np.sum(diag > rank_tol * diag[0])) if diag.size else 0
    basic, free = piv[:rank], np.sort(piv[rank:])
    # re-solve with the free columns moved to the right-hand side
    R11 = Rm[:rank, :rank]
    qb = Q[:, :rank].T @ b
    perm_pos = {c: i for i, c in enumerate(piv)}
    R12 = Rm[:rank, [perm_pos[c] for c in free]]
    y0 = np.zeros(ncols)
    y0[basic] = sla.solve_triangular(R11, qb)
    N = np.zeros((ncols, free.size))
    if free.size:
        N[basic] = -sla.solve_triangular(R11, R12)
        N[free, np.arange(free.size)] = 1.0
    residual = float(np.linalg.norm(A @ y0 - b))
    return y0, N, [int(c) for c in free], residual


def build_program(h: MultiPoly, e, mode: str = PLAIN, k: int | None = None,
                  R: float | None = None, dim_cap: int = sdp.DIM_CAP) -> MomentProgram:
    """Assemble ``F(h, e)``.

    Constraints: ``phi(1) = 1`` (``= d`` in trace mode), ``phi(w) = phi(reverse w)``
    (structural), ``phi(p g q) = 0`` for every generator ``g`` with
    ``deg p + deg g + deg q <= 2k``, and ``phi(w* w) <= phi(1) R^(2 deg w)``.
    Trace mode adds ``phi(uv) = phi(vu)`` and ``phi(H_alpha) = c_alpha`` for
    ``|alpha| <= min(2d, 2k)``.
    """
    if mode not in (PLAIN, TRACE):
        raise ValueError(f"mode must be {PLAIN!r} or {TRACE!r}")
    d = h.homogeneous_degree()
    if d < 1:
        raise PolyError("need deg h >= 1")
    e = e if isinstance(e, Direction) else Direction.of(h, e)
    ev = e.vector
    warnings = []
    if k is None:
        k = truncation_level(d)
    elif k < d:
        raise ValueError(f"k = {k} is below deg h = {d}")
    elif 2 * k < 2 * (d + 1):
        warnings.append(f"k = {k} < d + 1: products of degree 2(d+1) used by the compression argument are not defined")
    n = h.nvars
    m = word_count(n, k)
    if m > dim_cap:
        raise sdp.SdpError(f"moment matrix of size {m} exceeds the dimension cap {dim_cap}")
    R = spectral_bound(h, e) if R is None else float(R)
    index = WordIndex(n, k)
    red = _reduce(index, ev)
    K = 2 * k
    unit_value = float(d) if mode == TRACE else 1.0

    gens = ideal_generators(h, ev)
    rows = [np.eye(1, red.num_classes, 0)[0]]
    rhs = [unit_value]
    kinds = ["unit"]
    ideal = _ideal_rows(red, index, [gens.gens[a] for a in sorted(gens.gens, reverse=True)], K)
    rows += ideal
    rhs += [0.0] * len(ideal)
    kinds += ["ideal"] * len(ideal)
    if mode == TRACE:
        for w in red.red_words[1:]:
            rot = w[1:] + w[:1]
            row = np.zeros(red.num_classes)
            row[red.red_class[red.red_index[w]]] += 1.0
            row[red.red_class[red.red_index[rot]]] -= 1.0
            if np.any(row):
                rows.append(row), rhs.append(0.0), kinds.append("cyclic")
        coeffs = trace_coefficients(h, ev, min(2 * d, K))
        for alpha, c in coeffs.values.items():
            if sum(alpha) == 0:
                continue
            rows.append(red.vector(commutative_type_sum(alpha), index))
            rhs.append(c)
            kinds.append("trace")
    system = _dedup(rows, rhs, kinds)
    y0, N, free, resid = _parametrize(system, red.num_classes)
    consistent = resid <= 1e-8 * (1 + np.linalg.norm(system.rhs))

    # full moment matrix as an affine function of the free classes
    pairs = index.pair_ids()
    Vp = red.V[pairs.ravel()]
    M0 = (Vp @ y0).reshape(m, m)
    Mj = (Vp @ N).T.reshape(N.shape[1], m, m)
    M0 = 0.5 * (M0 + M0.T)
    Mj = 0.5 * (Mj + Mj.transpose(0, 2, 1))
    degs = np.array([len(w) for w in index.words])
    bounds = unit_value * R ** (2.0 * degs)

    q = N.shape[1]
    A_psd = np.concatenate([Mj, -np.eye(m)[None]], axis=0)
    diag_j = np.array([np.diag(M) for M in Mj]).reshape(q, m)
    # the empty word needs no bound: phi(1) is fixed
    A_lp = np.concatenate([-diag_j[:, 1:], -np.ones((1, m - 1))], axis=0)
    b = np.zeros(q + 1)
    b[q] = -1.0
    blocks, A, C = [m], [A_psd], [-M0]
    if m > 1:
        blocks.append(-(m - 1))
        A.append(A_lp)
        C.append(np.diag(M0)[1:] - bounds[1:])
    problem = sdp.SdpProblem(blocks, A, b, C, shift_var=q)
    return MomentProgram(h, e, index, k, mode, R, problem, red, system, y0, N, free, bounds,
                         M0, Mj, consistent, warnings)


def literal_constraint_count(mp: MomentProgram) -> int:
    """Number of literal ideal constraints ``phi(p g q) = 0`` (before deduplication)."""
    n, K = mp.index.n, 2 * mp.k
    d = mp.h.homogeneous_degree()
    total = 0
    for deg_g in [d] * len(ideal_generators(mp.h, mp.e.vector).gens) + [1]:
        L = K - deg_g
        total += sum((s + 1) * n ** s for s in range(L + 1)) if L >= 0 else 0
    return total


# ---------------------------------------------------------------------------
# solving


@dataclass
class ProgramSolution:
    result: sdp.SdpResult
    moments: np.ndarray | None
    x: np.ndarray | None
    status: sdp.Status
    message: str
    face_dim: int
    consequence: str = ""

    @property
    def feasible(self) -> bool:
        return self.status is sdp.Status.FEASIBLE


INFEASIBLE_CONSEQUENCE = ("-1 is a sum of hermitian squares in the generalized Clifford algebra; "
                          "no power of h admits a definite determinantal representation")


def _structural_face(mp: MomentProgram, rank_tol: float = 1e-9) -> np.ndarray:
    """Orthonormal basis of the range shared by all moment matrices of the affine family."""
    stack = np.concatenate([mp.M0[None], mp.Mj], axis=0)
    wide = stack.transpose(1, 0, 2).reshape(mp.size, -1)
    U, sv, _ = np.linalg.svd(wide, full_matrices=False)
    r = int(np.sum(sv > rank_tol * sv[0]))
    return U[:, :r]


def _reduced_problem(mp: MomentProgram, Q: np.ndarray) -> tuple[sdp.SdpProblem, np.ndarray]:
    """Maximize lambda with ``Q^T M(x) Q - lambda I`` psd and bound slacks ``>= lambda``."""
    q = mp.num_free
    r = Q.shape[1]
    A_psd = np.concatenate([np.matmul(Q.T, np.matmul(mp.Mj, Q)), -np.eye(r)[None]], axis=0)
    C_psd = -(Q.T @ mp.M0 @ Q)
    diag0 = np.diag(mp.M0)
    diag_j = np.array([np.diag(M) for M in mp.Mj]).reshape(q, mp.size)
    # identical bound rows keep the tightest bound
    rows: dict[bytes, int] = {}
    keep = []
    for w in range(1, mp.size):
        key = np.round(np.concatenate([diag_j[:, w], [diag0[w]]]), 12).tobytes()
        j = rows.get(key)
        if j is None:
            rows[key] = len(keep)
            keep.append(w)
        elif mp.bounds[w] < mp.bounds[keep[j]]:
            keep[j] = w
    keep = np.array(keep, dtype=np.int64)
    blocks = [r]
    A = [A_psd]
    C = [0.5 * (C_psd + C_psd.T)]
    if keep.size:
        blocks.append(-keep.size)
        A.append(np.concatenate([-diag_j[:, keep], -np.ones((1, keep.size))], axis=0))
        C.append(diag0[keep] - mp.bounds[keep])
    b = np.zeros(q + 1)
    b[q] = -1.0
    A[0] = 0.5 * (A[0] + A[0].transpose(0, 2, 1))
    return sdp.SdpProblem(blocks, A, b, C, shift_var=q), keep


def solve_program(mp: MomentProgram, tol: float = sdp.DEFAULT_TOL, max_iter: int = sdp.DEFAULT_MAX_ITER,
                  check_certified_level: bool = True) -> ProgramSolution:
    """Solve ``F(h, e)`` after removing the kernel shared by every moment matrix.

    On infeasibility at a truncation above ``2(d-1)`` the program is re-solved
    at ``2(d-1)`` and the algebraic consequence is only reported when that one
    is infeasible as well.
    """
    if not mp.consistent:
        res = sdp.SdpResult(sdp.Status.INFEASIBLE, [], np.zeros(0), None, 0, {}, None,
                            "linear constraints are inconsistent")
        return _with_consequence(mp, ProgramSolution(res, None, None, res.status, res.message, 0), tol, max_iter,
                                 check_certified_level)
    Q = _structural_face(mp)
    const_diag = np.diag(mp.M0)
    if mp.num_free == 0:
        M = Q.T @ mp.M0 @ Q
        lam = float(min(np.linalg.eigvalsh(M)[0], np.min(mp.bounds[1:] - const_diag[1:], initial=np.inf)))
        status = sdp.Status.FEASIBLE if lam >= -tol else sdp.Status.INFEASIBLE
        res = sdp.SdpResult(status, [], np.array([lam]), lam, 0, {"primal": 0.0, "dual": 0.0, "gap": 0.0}, lam)
        x = np.zeros(0)
    else:
        problem, _ = _reduced_problem(mp, Q)
        res = sdp.solve(problem, tol=tol, max_iter=max_iter)
        x = res.y[:mp.num_free]
        status = res.status
    sol = ProgramSolution(res, mp.moments(x) if status is sdp.Status.FEASIBLE else None, x, status,
                          res.message, Q.shape[1])
    return _with_consequence(mp, sol, tol, max_iter, check_certified_level)


def _with_consequence(mp, sol, tol, max_iter, check_certified_level):
    if sol.status is not sdp.Status.INFEASIBLE:
        return sol
    d = mp.h.homogeneous_degree()
    kp = certified_level(d)
    if mp.k <= kp:
        sol.consequence = INFEASIBLE_CONSEQUENCE
    elif check_certified_level and kp >= d:
        low = solve_program(build_program(mp.h, mp.e, mp.mode, k=kp, R=mp.R), tol, max_iter, False)
        if low.status is sdp.Status.INFEASIBLE:
            sol.consequence = INFEASIBLE_CONSEQUENCE
        else:
            sol.message += f"; infeasible only at k = {mp.k}, not at k = {kp}"
    return sol


# ---------------------------------------------------------------------------
# verification against the literal constraint set


def moments_from_operators(index: WordIndex, mats: Sequence[np.ndarray], v: np.ndarray,
                           scale: float = 1.0) -> np.ndarray:
    """``phi(w) = scale * <v, w(M) v>`` on every class, for symmetric ``M_i``."""
    v = np.asarray(v, dtype=float)
    out = np.empty(index.num_classes)
    cache: dict[Word, np.ndarray] = {(): v}
    for cid, w in enumerate(index.classes):
        # w(M) v computed right to left with memoized suffixes
        vec = cache.get(w)
        if vec is None:
            vec = mats[w[0] - 1] @ _suffix(cache, w[1:], mats)
            cache[w] = vec
        out[cid] = scale * float(v @ vec)
    return out


def _suffix(cache, w, mats):
    vec = cache.get(w)
    if vec is None:
        vec = mats[w[0] - 1] @ _suffix(cache, w[1:], mats)
        cache[w] = vec
    return vec


def _concat_ids(index: WordIndex, dp: int, dq: int, wid_core: np.ndarray, dcore: int) -> np.ndarray:
    """Ids of ``p + core + q`` for all ``p`` of degree dp, ``q`` of degree dq."""
    n = index.n
    pv = np.arange(n ** dp)[:, None, None]
    qv = np.arange(n ** dq)[None, None, :]
    cv = wid_core[None, :, None]
    val = (pv * n ** dcore + cv) * n ** dq + qv
    return index.offsets[dp + dcore + dq] + val


def literal_residuals(mp: MomentProgram, moments: np.ndarray) -> dict[str, float]:
    """Maximum violation of each literal constraint family at ``moments``."""
    index = mp.index
    n, K = index.n, 2 * mp.k
    phi = moments[index.word_class]
    out = {"unit": abs(moments[0] - mp.unit_value)}
    gens = ideal_generators(mp.h, mp.e.vector)
    worst = 0.0
    for g in gens.all():
        dg = g.degree
        by_deg: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        for w, c in g.terms.items():
            v = 0
            for l in w:
                v = v * n + (l - 1)
            ids, cs = by_deg.get(len(w), ([], []))
            ids.append(v), cs.append(c)
            by_deg[len(w)] = (ids, cs)
        for dp in range(K - dg + 1):
            for dq in range(K - dg - dp + 1):
                acc = 0.0
                for dw, (ids, cs) in by_deg.items():
                    # words of g shorter than deg g are padded by the same p, q
                    cid = _concat_ids(index, dp, dq, np.array(ids), dw)
                    acc = acc + np.tensordot(phi[cid], np.array(cs), axes=([1], [0]))
                worst = max(worst, float(np.abs(acc).max()))
    out["ideal"] = worst
    M = _full_matrix(index, moments)
    out["psd"] = float(-min(0.0, np.linalg.eigvalsh(M)[0]))
    out["bounds"] = float(max(0.0, np.max(np.diag(M)[1:] - mp.bounds[1:], initial=0.0)))
    if mp.mode == TRACE:
        cyc = 0.0
        for s in range(1, K + 1):
            base = index.offsets[s]
            vals = np.arange(n ** s)
            first = vals // n ** (s - 1)
            rot = (vals % n ** (s - 1)) * n + first
            cyc = max(cyc, float(np.abs(phi[base + vals] - phi[base + rot]).max()))
        out["cyclic"] = cyc
        d = mp.h.homogeneous_degree()
        coeffs = trace_coefficients(mp.h, mp.e.vector, min(2 * d, K))
        tr = 0.0
        for alpha, c in coeffs.values.items():
            H = commutative_type_sum(alpha)
            val = sum(phi[index.word_id(w)] for w in H.terms)
            tr = max(tr, abs(val - c))
        out["trace"] = tr
    return out


def _full_matrix(index: WordIndex, moments: np.ndarray, deg: int | None = None) -> np.ndarray:
    return moments[index.word_class[index.pair_ids(deg)]]


def moment_matrix(index: WordIndex, moments: np.ndarray, deg: int | None = None) -> np.ndarray:
    """``(phi(reverse(u) w))`` over words of degree <= deg (default k)."""
    return _full_matrix(index, moments, deg)


def export_program(mp: MomentProgram) -> tuple[str, dict]:
    """SDPA text of the canonical program and its index sidecar."""
    text = sdp.export_sdpa(mp.problem)
    variables = [{"id": i + 1, "word": list(w)} for i, w in enumerate(mp.free_words())]
    variables.append({"id": mp.num_free + 1, "word": None, "role": "lambda"})
    sidecar = {"n": mp.index.n, "k": mp.k, "mode": mp.mode, "R": mp.R,
               "blocks": mp.problem.block_sizes,
               "variables": variables,
               "moment_words": [list(w) for w in mp.index.words],
               "eliminated_letter": mp.reduction.letter,
               "summary": mp.summary()}
    return text, sidecar
