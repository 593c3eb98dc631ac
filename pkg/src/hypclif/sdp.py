"""Small dense semidefinite programs.

Problems use the SDPA convention::

    (P)  maximize <C, X>  s.t.  <A_i, X> = b_i,  X psd (block diagonal)
    (D)  minimize b.y     s.t.  S = sum_i y_i A_i - C  psd

A block with negative size ``-k`` is a diagonal block of ``k`` scalars, as in
SDPA.  Dense blocks store ``A`` as an array of shape ``(m, k, k)``; diagonal
blocks as ``(m, k)``.

The solver is an infeasible primal-dual path-following method with the
HKM search direction and Mehrotra predictor-corrector steps.  Feasibility
problems are posed as "maximize the smallest eigenvalue", which always has
a strictly feasible point, so the solver is never asked to detect infeasibility
from a diverging iterate: a negative optimal shift with a matching dual bound is
the certificate.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as sla

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 200
DIM_CAP = 600
LAMBDA_CAP = 1e3


class SdpError(ValueError):
    pass


class Status(str, enum.Enum):
    FEASIBLE = "Feasible"
    INFEASIBLE = "Infeasible"
    INDETERMINATE = "Indeterminate"


@dataclass
class SdpProblem:
    """Block-diagonal SDP in SDPA form.

    ``shift_var`` marks a dual variable whose coefficient matrices are
    ``-I`` on the shifted blocks and whose cost is ``-1``: the problem is then
    "maximize the smallest eigenvalue of S", and solve() reports feasibility
    from the sign of that variable.
    """

    block_sizes: list[int]
    A: list[np.ndarray]
    b: np.ndarray
    C: list[np.ndarray]
    shift_var: int | None = None

    def __post_init__(self):
        self.block_sizes = [int(s) for s in self.block_sizes]
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        m = self.b.size
        if len(self.A) != len(self.block_sizes) or len(self.C) != len(self.block_sizes):
            raise SdpError("one coefficient array per block is required")
        for k, s in enumerate(self.block_sizes):
            if s == 0:
                raise SdpError("zero block size")
            shape = (m, s, s) if s > 0 else (m, -s)
            self.A[k] = np.asarray(self.A[k], dtype=float).reshape(shape)
            self.C[k] = np.asarray(self.C[k], dtype=float).reshape(shape[1:])
            if s > 0:
                if not np.allclose(self.A[k], self.A[k].transpose(0, 2, 1), atol=1e-12, rtol=0):
                    raise SdpError(f"constraint matrices in block {k} are not symmetric")
                if not np.allclose(self.C[k], self.C[k].T, atol=1e-12, rtol=0):
                    raise SdpError(f"objective in block {k} is not symmetric")

    @property
    def m(self) -> int:
        return self.b.size

    @property
    def total_dim(self) -> int:
        return sum(abs(s) for s in self.block_sizes)

    @classmethod
    def from_constraints(cls, block_sizes: Sequence[int], constraints, objective=None,
                         shift_var: int | None = None) -> "SdpProblem":
        """Build from a list of ``(blocks, rhs)`` pairs; ``blocks`` holds one matrix per block."""
        A = []
        for k, s in enumerate(block_sizes):
            shape = (s, s) if s > 0 else (-s,)
            A.append(np.array([np.asarray(c[0][k], dtype=float).reshape(shape) for c in constraints]).reshape((len(constraints),) + shape))
        b = np.array([c[1] for c in constraints], dtype=float)
        if objective is None:
            objective = [np.zeros((s, s) if s > 0 else (-s,)) for s in block_sizes]
        return cls(list(block_sizes), A, b, [np.asarray(c, dtype=float) for c in objective], shift_var)

    def constraint(self, i: int) -> list[np.ndarray]:
        return [Ak[i] for Ak in self.A]

    # linear maps
    def op(self, X: list[np.ndarray]) -> np.ndarray:
        """``(<A_i, X>)_i``."""
        out = np.zeros(self.m)
        for s, Ak, Xk in zip(self.block_sizes, self.A, X):
            out += Ak.reshape(self.m, -1) @ Xk.reshape(-1)
        return out

    def adj(self, y: np.ndarray) -> list[np.ndarray]:
        """``sum_i y_i A_i`` per block."""
        return [np.tensordot(y, Ak, axes=1) for Ak in self.A]

    def slack(self, y: np.ndarray) -> list[np.ndarray]:
        return [a - c for a, c in zip(self.adj(y), self.C)]

    def objective_value(self, X: list[np.ndarray]) -> float:
        return float(sum(np.vdot(c, x) for c, x in zip(self.C, X)))

    def same_as(self, other: "SdpProblem") -> bool:
        return (self.block_sizes == other.block_sizes and self.m == other.m
                and np.array_equal(self.b, other.b)
                and all(np.array_equal(a, c) for a, c in zip(self.A, other.A))
                and all(np.array_equal(a, c) for a, c in zip(self.C, other.C)))


@dataclass
class SdpResult:
    status: Status
    X: list[np.ndarray]
    y: np.ndarray
    lambda_min: float | None
    iterations: int
    residuals: dict[str, float]
    lambda_bound: float | None = None
    message: str = ""
    S: list[np.ndarray] = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return self.status is Status.FEASIBLE


def min_eig(blocks: Sequence[np.ndarray]) -> float:
    vals = []
    for B in blocks:
        vals.append(B.min() if B.ndim == 1 else np.linalg.eigvalsh(B)[0])
    return float(min(vals)) if vals else 0.0


# ---------------------------------------------------------------------------
# interior-point core


def _max_step(Xk: np.ndarray, dXk: np.ndarray) -> float:
    if Xk.ndim == 1:
        neg = dXk < 0
        return float(np.min(-Xk[neg] / dXk[neg])) if np.any(neg) else np.inf
    L = np.linalg.cholesky(Xk)
    Linv = sla.solve_triangular(L, np.eye(len(L)), lower=True)
    lam = np.linalg.eigvalsh(Linv @ dXk @ Linv.T)[0]
    return -1.0 / lam if lam < 0 else np.inf


@dataclass
class _Iterate:
    X: list[np.ndarray]
    y: np.ndarray
    S: list[np.ndarray]


def _initial_point(p: SdpProblem) -> _Iterate:
    n = p.total_dim
    normA = [max(np.linalg.norm(np.concatenate([Ak[i].ravel() for Ak in p.A])), 1e-12) for i in range(p.m)]
    normC = np.sqrt(sum(np.sum(c**2) for c in p.C))
    xi = max(10.0, np.sqrt(n), *(n * (1 + abs(bi)) / (1 + na) for bi, na in zip(p.b, normA))) if p.m else 10.0
    eta = max(10.0, np.sqrt(n), normC, *normA) if p.m else max(10.0, normC)
    X = [xi * (np.eye(s) if s > 0 else np.ones(-s)) for s in p.block_sizes]
    S = [eta * (np.eye(s) if s > 0 else np.ones(-s)) for s in p.block_sizes]
    return _Iterate(X, np.zeros(p.m), S)


def _direction(p: SdpProblem, it: _Iterate, Sinv, Rp, Rd, target: float, corr):
    """HKM direction for complementarity target ``target`` with optional second-order term."""
    m = p.m
    M = np.zeros((m, m))
    rhs = -Rp.copy()
    for k, s in enumerate(p.block_sizes):
        Ak, Xk, Si = p.A[k], it.X[k], Sinv[k]
        if s > 0:
            XA = np.matmul(Xk, Ak)
            XAS = np.matmul(XA, Si)
            M += Ak.reshape(m, -1) @ XAS.reshape(m, -1).T
            W = target * Si - Xk - Xk @ Rd[k] @ Si
            if corr is not None:
                W -= corr[k] @ Si
            rhs += Ak.reshape(m, -1) @ W.reshape(-1)
        else:
            M += (Ak * (Xk * Si)) @ Ak.T
            W = target * Si - Xk - Xk * Rd[k] * Si
            if corr is not None:
                W -= corr[k] * Si
            rhs += Ak @ W
    M = 0.5 * (M + M.T)
    try:
        dy = sla.cho_solve(sla.cho_factor(M), rhs)
    except np.linalg.LinAlgError:
        dy = np.linalg.lstsq(M, rhs, rcond=None)[0]
    dS = [a + r for a, r in zip(p.adj(dy), Rd)]
    dX = []
    for k, s in enumerate(p.block_sizes):
        Xk, Si = it.X[k], Sinv[k]
        if s > 0:
            D = target * Si - Xk - Xk @ dS[k] @ Si
            if corr is not None:
                D -= corr[k] @ Si
            dX.append(0.5 * (D + D.T))
        else:
            D = target * Si - Xk - Xk * dS[k] * Si
            if corr is not None:
                D -= corr[k] * Si
            dX.append(D)
    return dX, dy, dS


def _ipm(p: SdpProblem, tol: float, max_iter: int):
    it = _initial_point(p)
    n = p.total_dim
    normb = 1 + np.linalg.norm(p.b)
    normC = 1 + np.sqrt(sum(np.sum(c**2) for c in p.C))
    info = {"primal": np.inf, "dual": np.inf, "gap": np.inf}
    converged = False
    k = 0
    for k in range(1, max_iter + 1):
        Rp = p.b - p.op(it.X)
        Rd = [s - c - sk for s, c, sk in zip(p.adj(it.y), p.C, it.S)]
        pobj, dobj = p.objective_value(it.X), float(p.b @ it.y)
        mu = sum(np.vdot(x, s) for x, s in zip(it.X, it.S)) / n
        info = {
            "primal": float(np.linalg.norm(Rp) / normb),
            "dual": float(np.sqrt(sum(np.sum(r**2) for r in Rd)) / normC),
            "gap": float(abs(dobj - pobj) / (1 + abs(pobj) + abs(dobj))),
            "mu": float(mu),
        }
        if max(info["primal"], info["dual"], info["gap"]) <= tol:
            converged = True
            break
        try:
            Sinv = [1.0 / s if s.ndim == 1 else sla.cho_solve(sla.cho_factor(s), np.eye(len(s))) for s in it.S]
            Sinv = [0.5 * (s + s.T) if s.ndim == 2 else s for s in Sinv]
            dXa, dya, dSa = _direction(p, it, Sinv, Rp, Rd, 0.0, None)
            ap = min(1.0, min(_max_step(x, d) for x, d in zip(it.X, dXa)))
            ad = min(1.0, min(_max_step(s, d) for s, d in zip(it.S, dSa)))
            mu_aff = sum(np.vdot(x + ap * dx, s + ad * ds) for x, dx, s, ds in zip(it.X, dXa, it.S, dSa)) / n
            sigma = min(1.0, max(0.0, (mu_aff / mu) ** 3))
            corr = [dx @ ds if dx.ndim == 2 else dx * ds for dx, ds in zip(dXa, dSa)]
            dX, dy, dS = _direction(p, it, Sinv, Rp, Rd, sigma * mu, corr)
            gamma = 0.9 if k < 5 else 0.98
            ap = min(1.0, gamma * min(_max_step(x, d) for x, d in zip(it.X, dX)))
            ad = min(1.0, gamma * min(_max_step(s, d) for s, d in zip(it.S, dS)))
        except np.linalg.LinAlgError as exc:
            info["breakdown"] = str(exc)
            break
        it.X = [x + ap * d for x, d in zip(it.X, dX)]
        it.y = it.y + ad * dy
        it.S = [s + ad * d for s, d in zip(it.S, dS)]
        if ap < 1e-10 and ad < 1e-10:
            info["breakdown"] = "step length collapsed"
            break
    info["iterations"] = k
    info["primal_objective"] = p.objective_value(it.X)
    info["dual_objective"] = float(p.b @ it.y)
    return it, converged, info


def _check_dims(p: SdpProblem, dim_cap: int):
    if p.total_dim > dim_cap:
        raise SdpError(f"total block dimension {p.total_dim} exceeds cap {dim_cap}")


def solve(p: SdpProblem, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
          mode: str = "objective", shift_blocks: Sequence[int] | None = None,
          dim_cap: int = DIM_CAP) -> SdpResult:
    """Solve ``p``.

    ``mode="objective"`` solves the pair (P)/(D) as given.  If the problem has
    a ``shift_var`` the status reflects the sign of the optimal shift.

    ``mode="lambda_min"`` ignores ``C`` and maximizes the smallest eigenvalue
    of ``X`` over the blocks in ``shift_blocks`` (default: all) subject to the
    linear constraints.
    """
    _check_dims(p, dim_cap)
    if mode == "lambda_min":
        return _solve_lambda_min(p, tol, max_iter, shift_blocks)
    if mode != "objective":
        raise SdpError(f"unknown mode {mode!r}")
    it, converged, info = _ipm(p, tol, max_iter)
    residuals = {k: info[k] for k in ("primal", "dual", "gap")}
    if p.shift_var is None:
        status = Status.FEASIBLE if converged else Status.INDETERMINATE
        return SdpResult(status, it.X, it.y, None, info["iterations"], residuals,
                         message="" if converged else info.get("breakdown", "iteration limit"), S=it.S)
    lam = float(it.y[p.shift_var])
    # weak duality: -lambda = b.y >= <C, X> for any dual-feasible X
    bound = -info["primal_objective"]
    status, msg = _shift_status(lam, bound, converged, info, tol)
    return SdpResult(status, it.X, it.y, lam, info["iterations"], residuals, bound, msg, S=it.S)


def _shift_status(lam, bound, converged, info, tol):
    if converged and lam >= -tol:
        return Status.FEASIBLE, ""
    if info["primal"] <= tol and bound < -10 * tol:
        return Status.INFEASIBLE, f"dual bound {bound:.3e} on the smallest eigenvalue"
    if not converged:
        return Status.INDETERMINATE, info.get("breakdown", "iteration limit reached")
    return Status.INDETERMINATE, f"optimal shift {lam:.3e} is within the indeterminate band"


# ---------------------------------------------------------------------------
# maximize lambda_min(X) subject to <A_i, X> = b_i


def _svec_layout(block_sizes):
    """Coordinates of the independent entries of each block."""
    layout = []
    offset = 0
    for s in block_sizes:
        if s > 0:
            iu = np.triu_indices(s)
            layout.append((offset, iu))
            offset += len(iu[0])
        else:
            layout.append((offset, None))
            offset += -s
    return layout, offset


def _constraint_matrix(p: SdpProblem, layout, nvar):
    """Rows ``a_i`` with ``<A_i, X> = a_i . u`` where ``u`` holds independent entries."""
    rows = np.zeros((p.m, nvar))
    for s, Ak, (off, iu) in zip(p.block_sizes, p.A, layout):
        if s > 0:
            w = np.where(iu[0] == iu[1], 1.0, 2.0)
            rows[:, off:off + len(iu[0])] = Ak[:, iu[0], iu[1]] * w
        else:
            rows[:, off:off - s] = Ak
    return rows


def _unpack(u, block_sizes, layout):
    out = []
    for s, (off, iu) in zip(block_sizes, layout):
        if s > 0:
            B = np.zeros((s, s))
            B[iu] = u[off:off + len(iu[0])]
            out.append(B + np.triu(B, 1).T)
        else:
            out.append(np.array(u[off:off - s]))
    return out


def _weighted(blocks, block_sizes, layout, nvar):
    """Coordinates ``w`` with ``<W, X> = w . u``."""
    w = np.zeros(nvar)
    for s, B, (off, iu) in zip(block_sizes, blocks, layout):
        if s > 0:
            w[off:off + len(iu[0])] = B[iu] * np.where(iu[0] == iu[1], 1.0, 2.0)
        else:
            w[off:off - s] = B
    return w


def affine_parametrization(rows: np.ndarray, rhs: np.ndarray, rank_tol: float = 1e-10):
    """Particular solution, null-space basis and residual of ``rows @ u = rhs``."""
    if rows.shape[0] == 0:
        return np.zeros(rows.shape[1]), np.eye(rows.shape[1]), 0.0
    U, sv, Vt = np.linalg.svd(rows, full_matrices=True)
    rank = int(np.sum(sv > rank_tol * max(sv.max(initial=0.0), 1e-300)))
    coef = (U[:, :rank].T @ rhs) / sv[:rank]
    u0 = Vt[:rank].T @ coef
    residual = float(np.linalg.norm(rows @ u0 - rhs))
    return u0, Vt[rank:].T, residual


def _solve_lambda_min(p: SdpProblem, tol, max_iter, shift_blocks) -> SdpResult:
    sizes = p.block_sizes
    shift_blocks = list(range(len(sizes))) if shift_blocks is None else list(shift_blocks)
    layout, nvar = _svec_layout(sizes)
    rows = _constraint_matrix(p, layout, nvar)
    u0, N, resid = affine_parametrization(rows, p.b)
    if resid > 1e-9 * (1 + np.linalg.norm(p.b)):
        # Farkas: y = -(b - a u0) has sum y_i A_i = 0 and b.y < 0
        y = -(p.b - rows @ u0)
        return SdpResult(Status.INFEASIBLE, _unpack(u0, sizes, layout), y, None, 0,
                         {"primal": resid, "dual": 0.0, "gap": 0.0}, None,
                         "linear constraints are inconsistent")
    X0 = _unpack(u0, sizes, layout)
    q = N.shape[1]
    A_int = []
    for k, s in enumerate(sizes):
        shape = (s, s) if s > 0 else (-s,)
        Ak = np.zeros((q + 1,) + shape)
        for j in range(q):
            Ak[j] = _unpack(N[:, j], sizes, layout)[k]
        if k in shift_blocks:
            Ak[q] = -(np.eye(s) if s > 0 else np.ones(-s))
        A_int.append(Ak)
    # lambda is unbounded when the null space holds a definite direction; the
    # cap block lambda <= cap keeps the inner problem compact
    cap = LAMBDA_CAP * (1.0 + float(np.abs(u0).max(initial=0.0)))
    capA = np.zeros((q + 1, 1))
    capA[q] = -1.0
    b_int = np.zeros(q + 1)
    b_int[q] = -1.0
    inner = SdpProblem(list(sizes) + [-1], A_int + [capA], b_int, [-x for x in X0] + [np.array([-cap])], shift_var=q)
    res = solve(inner, tol, max_iter)
    if res.lambda_min is not None and res.lambda_min >= cap * (1 - 1e-6):
        res.status, res.message = Status.FEASIBLE, f"smallest eigenvalue unbounded above; stopped at cap {cap:.3e}"
    u = u0 + N @ res.y[:q]
    X = _unpack(u, sizes, layout)
    # dual matrix W of the inner problem is orthogonal to the null space, so W = sum y_i A_i
    w = _weighted(res.X, sizes, layout, nvar)
    y, *_ = np.linalg.lstsq(rows.T, w, rcond=None)
    return SdpResult(res.status, X, y, res.lambda_min, res.iterations, res.residuals,
                     res.lambda_bound, res.message, S=res.S[:-1])


def verify_certificate(p: SdpProblem, y: np.ndarray, tol: float = 1e-7) -> dict[str, float]:
    """Check an infeasibility certificate: ``sum y_i A_i`` psd and ``b.y < 0``."""
    Y = p.adj(y)
    scale = max(1e-300, max(np.abs(B).max() if B.size else 0.0 for B in Y) if Y else 1.0)
    return {"min_eig": min_eig(Y) / max(scale, abs(float(p.b @ y))), "b_dot_y": float(p.b @ y)}


# ---------------------------------------------------------------------------
# SDPA sparse format


def _fmt(v: float) -> str:
    # shortest repr that round-trips bit for bit
    return repr(float(v))


def export_sdpa(p: SdpProblem) -> str:
    """SDPA sparse text (.dat-s).

    Matrix 0 is the objective ``C``; matrices ``1..m`` are the ``A_i``.  Only
    nonzero upper-triangular entries are written, ordered by matrix, block,
    then row-major position.
    """
    lines = [str(p.m), str(len(p.block_sizes)), " ".join(str(s) for s in p.block_sizes),
             " ".join(_fmt(v) for v in p.b)]
    mats = [p.C] + [p.constraint(i) for i in range(p.m)]
    for matno, blocks in enumerate(mats):
        for blk, (s, B) in enumerate(zip(p.block_sizes, blocks), start=1):
            if s > 0:
                for i in range(s):
                    for j in range(i, s):
                        if B[i, j] != 0.0:
                            lines.append(f"{matno} {blk} {i + 1} {j + 1} {_fmt(B[i, j])}")
            else:
                for i in np.flatnonzero(B):
                    lines.append(f"{matno} {blk} {i + 1} {i + 1} {_fmt(B[i])}")
    return "\n".join(lines) + "\n"


class SdpaParseError(SdpError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


def parse_sdpa(text: str) -> SdpProblem:
    """Inverse of :func:`export_sdpa`; comment lines starting with ``"`` or ``*`` are skipped."""
    raw = text.split("\n")
    body = [(no, ln) for no, ln in enumerate(raw, start=1) if not ln.lstrip().startswith(('"', '*'))]
    if len(body) < 4:
        raise SdpaParseError("header needs four lines", len(raw))

    def ints(no, ln, count=None):
        try:
            vals = [int(t) for t in ln.replace(",", " ").split()]
        except ValueError:
            raise SdpaParseError(f"expected integers, got {ln!r}", no) from None
        if count is not None and len(vals) != count:
            raise SdpaParseError(f"expected {count} integers, got {len(vals)}", no)
        return vals

    (no, ln) = body[0]
    m = ints(no, ln, 1)[0]
    (no, ln) = body[1]
    nblocks = ints(no, ln, 1)[0]
    (no, ln) = body[2]
    sizes = ints(no, ln, nblocks)
    (no, ln) = body[3]
    try:
        b = [float(t) for t in ln.replace(",", " ").replace("{", " ").replace("}", " ").split()]
    except ValueError:
        raise SdpaParseError(f"bad right-hand side {ln!r}", no) from None
    if len(b) != m:
        raise SdpaParseError(f"expected {m} right-hand-side values, got {len(b)}", no)
    if any(s == 0 for s in sizes):
        raise SdpaParseError("zero block size", body[2][0])
    A = [np.zeros((m, s, s)) if s > 0 else np.zeros((m, -s)) for s in sizes]
    C = [np.zeros((s, s)) if s > 0 else np.zeros(-s) for s in sizes]
    for no, ln in body[4:]:
        parts = ln.split()
        if not parts:
            continue
        if len(parts) != 5:
            raise SdpaParseError(f"expected 'matno blkno i j value', got {ln!r}", no)
        try:
            matno, blk, i, j = (int(t) for t in parts[:4])
            val = float(parts[4])
        except ValueError:
            raise SdpaParseError(f"malformed entry {ln!r}", no) from None
        if not (0 <= matno <= m and 1 <= blk <= nblocks):
            raise SdpaParseError(f"matrix or block index out of range in {ln!r}", no)
        s = sizes[blk - 1]
        i, j = min(i, j), max(i, j)
        if not (1 <= i and j <= abs(s)) or (s < 0 and i != j):
            raise SdpaParseError(f"entry position out of range in {ln!r}", no)
        target = C[blk - 1] if matno == 0 else A[blk - 1][matno - 1]
        if s > 0:
            target[i - 1, j - 1] = target[j - 1, i - 1] = val
        else:
            target[i - 1] = val
    return SdpProblem(sizes, A, np.array(b), C)
