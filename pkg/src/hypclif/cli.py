"""Command-line interface: ``hypclif <command> -p POLYFILE -e E ...``."""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from dataclasses import dataclass, asdict, field
from pathlib import Path

import numpy as np

from . import gns, hermite, moment, poly, sdp

log = logging.getLogger("hypclif")

EXIT_OK = 0
EXIT_WITNESS = 1
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3
EXIT_INDETERMINATE = 4
EXIT_VERIFY = 5


@dataclass
class PipelineConfig:
    poly_path: str | None = None
    direction: list[float] | None = None
    k: int | None = None
    mode: str = moment.PLAIN
    tol: float = sdp.DEFAULT_TOL
    max_iter: int = sdp.DEFAULT_MAX_ITER
    rank_tol: float = 1e-7
    boundary_tol: float = 1e-6
    verify_tol: float = 1e-6
    seed: int = 42
    trials: int = 200
    samples: int = 200
    cone_samples: int = 1000
    json_out: str | None = None
    export: str | None = None
    extra: dict = field(default_factory=dict)

    def validate(self):
        for name in ("tol", "rank_tol", "boundary_tol", "verify_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


class InputError(Exception):
    pass


def _to_json(obj):
    if isinstance(obj, dict):
        return {str(k): _to_json(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_json(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _to_json(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (sdp.Status, poly.ConeVerdict)):
        return obj.value
    return obj


class Run:
    """Shared state of one invocation: parsed input, config and the report being built."""

    def __init__(self, cfg: PipelineConfig, command: str):
        self.cfg = cfg
        self.report: dict = {"command": command, "config": asdict(cfg)}
        self.h: poly.MultiPoly | None = None
        self.e: poly.Direction | None = None

    def load(self):
        cfg = self.cfg
        if cfg.poly_path is None or cfg.direction is None:
            raise InputError("both -p POLYFILE and -e E are required")
        try:
            text = Path(cfg.poly_path).read_text() if cfg.poly_path != "-" else sys.stdin.read()
        except OSError as ex:
            raise InputError(f"cannot read {cfg.poly_path}: {ex}") from None
        text = text.strip()
        n = len(cfg.direction)
        try:
            h = poly.parse_poly(text, n)
            d = h.homogeneous_degree()
            if d < 1:
                raise InputError("h must have degree >= 1")
            e = poly.Direction.of(h, cfg.direction)
        except poly.PolyError as ex:
            raise InputError(str(ex)) from None
        self.h, self.e = h, e
        self.report["input"] = {"poly": text, "sha256": hashlib.sha256(text.encode()).hexdigest(),
                                "e": list(e.e), "nvars": n, "degree": d, "h_of_e": e.he}
        return h, e

    def write(self):
        if self.cfg.json_out:
            Path(self.cfg.json_out).write_text(json.dumps(_to_json(self.report), indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# commands


def cmd_check(run: Run) -> int:
    h, e = run.load()
    res = poly.is_hyperbolic(h, e, run.cfg.trials, run.cfg.seed)
    run.report["check"] = {"hyperbolic": res.verdict, "trials": res.trials,
                           "witness": None if res.witness is None else res.witness.tolist()}
    if res.verdict:
        print(f"hyperbolic in direction {[float(v) for v in e.e]} ({res.trials} random lines, all roots real)")
        return EXIT_OK
    print(f"not hyperbolic: witness a = {res.witness.tolist()}")
    return EXIT_WITNESS


def cmd_member(run: Run) -> int:
    h, e = run.load()
    a = _vector(run.cfg.extra.get("at"), "--at")
    cm = poly.cone_membership(h, e, a, run.cfg.boundary_tol)
    run.report["member"] = {"a": a.tolist(), "verdict": cm.verdict.value, "min_root": cm.min_root}
    print(f"{cm.verdict.value} (smallest root {cm.min_root:.6g})")
    return EXIT_OK


def cmd_hermite(run: Run) -> int:
    h, e = run.load()
    H = hermite.hermite_multivariate(h, e)
    out = {"matrix": H.to_strings()}
    print(json.dumps(H.to_strings()))
    at = run.cfg.extra.get("at")
    if at is not None:
        a = _vector(at, "--at")
        Ha = H(a)
        ev = np.linalg.eigvalsh(Ha)
        out["at"] = {"a": a.tolist(), "value": Ha.tolist(), "eigenvalues": ev.tolist()}
        print(f"eigenvalues at a: {ev.tolist()}")
    if run.cfg.extra.get("sos"):
        try:
            s = hermite.hermite_sos(H, tol=run.cfg.tol, max_iter=run.cfg.max_iter)
            out["sos"] = {"found": True, "residual": s.residual, "gram_min_eig": float(np.linalg.eigvalsh(s.gram)[0]),
                          "basis": [[i, list(m)] for i, m in s.basis], "gram": s.gram.tolist()}
            print(f"matrix sum of squares found (coefficient residual {s.residual:.2e})")
        except hermite.NotFound as ex:
            out["sos"] = {"found": False, "message": str(ex)}
            print(f"no matrix sum of squares: {ex}")
    run.report["hermite"] = out
    return EXIT_OK


def _build(run: Run) -> moment.MomentProgram:
    h, e = run.h, run.e
    try:
        mp = moment.build_program(h, e, run.cfg.mode, k=run.cfg.k)
    except sdp.SdpError:
        raise
    except ValueError as ex:
        raise InputError(str(ex)) from None
    for w in mp.warnings:
        print(f"warning: {w}")
    run.report["program"] = mp.summary()
    run.report["k"] = mp.k
    return mp


def cmd_program(run: Run) -> int:
    run.load()
    mp = _build(run)
    s = mp.summary()
    print(f"k = {mp.k}, mode = {mp.mode}, moment block {mp.size}x{mp.size}, "
          f"{s['constraint_rows']} constraint rows ({s['constraints']}), {s['free_variables']} free moments")
    if run.cfg.export:
        text, side = moment.export_program(mp)
        path = Path(run.cfg.export)
        path.write_text(text)
        side_path = sidecar_path(path)
        side_path.write_text(json.dumps(_to_json(side), indent=2, sort_keys=True) + "\n")
        run.report["export"] = {"sdpa": str(path), "index": str(side_path)}
        print(f"wrote {path} and {side_path}")
    return EXIT_OK


def sidecar_path(path: Path) -> Path:
    name = path.name
    for suffix in (".dat-s", ".dat"):
        if name.endswith(suffix):
            return path.with_name(name[: -len(suffix)] + ".index.json")
    return path.with_name(name + ".index.json")


def _solve(run: Run, mp: moment.MomentProgram) -> moment.ProgramSolution:
    sol = moment.solve_program(mp, tol=run.cfg.tol, max_iter=run.cfg.max_iter)
    r = sol.result
    run.report["status"] = sol.status.value
    run.report["solve"] = {"status": sol.status.value, "lambda": r.lambda_min, "lambda_bound": r.lambda_bound,
                           "iterations": r.iterations, "residuals": r.residuals, "message": sol.message,
                           "face_dim": sol.face_dim, "consequence": sol.consequence}
    if sol.feasible:
        run.report["solve"]["literal_residuals"] = moment.literal_residuals(mp, sol.moments)
    print(f"status {sol.status.value}; optimal shift {r.lambda_min}" + (f"; {sol.message}" if sol.message else ""))
    if sol.consequence:
        print(sol.consequence)
    return sol


def _status_exit(sol) -> int | None:
    if sol.status is sdp.Status.INFEASIBLE:
        return EXIT_INFEASIBLE
    if sol.status is sdp.Status.INDETERMINATE:
        return EXIT_INDETERMINATE
    return None


def cmd_solve(run: Run) -> int:
    sdpa_file = run.cfg.extra.get("sdpa")
    if sdpa_file:
        try:
            p = sdp.parse_sdpa(Path(sdpa_file).read_text())
        except (OSError, sdp.SdpError) as ex:
            raise InputError(str(ex)) from None
        res = sdp.solve(p, tol=run.cfg.tol, max_iter=run.cfg.max_iter)
        run.report["status"] = res.status.value
        run.report["solve"] = {"status": res.status.value, "iterations": res.iterations,
                               "residuals": res.residuals, "objective": p.objective_value(res.X),
                               "y": res.y.tolist(), "message": res.message}
        print(f"status {res.status.value}; objective {p.objective_value(res.X):.10g}")
        return EXIT_OK if res.feasible else EXIT_INDETERMINATE
    run.load()
    mp = _build(run)
    sol = _solve(run, mp)
    if sol.feasible:
        run.report["moments"] = [{"word": list(w), "value": float(v)} for w, v in zip(mp.index.classes, sol.moments)]
    return _status_exit(sol) or EXIT_OK


def _operators(run: Run, mp, sol) -> gns.OperatorTuple:
    d = run.h.homogeneous_degree()
    ops = gns.gns(sol.moments, mp.index, d, run.cfg.rank_tol)
    run.report["gns"] = {"r": ops.r, "rank_bound": gns.rank_bound(run.h.nvars, d), "skew": ops.skew,
                         "gram_eigenvalues": ops.eigenvalues.tolist(), "rank_tol": run.cfg.rank_tol}
    print(f"quotient rank r = {ops.r} (bound {gns.rank_bound(run.h.nvars, d)})")
    return ops


def cmd_gns(run: Run) -> int:
    run.load()
    mp = _build(run)
    sol = _solve(run, mp)
    code = _status_exit(sol)
    if code is not None:
        return code
    ops = _operators(run, mp, sol)
    data = ops.to_json({"rank_tol": run.cfg.rank_tol, "k": mp.k})
    run.report["operators"] = data
    out = run.cfg.extra.get("ops_out")
    if out:
        Path(out).write_text(json.dumps(data, indent=2) + "\n")
        print(f"wrote {out}")
    return EXIT_OK


def _verify(run: Run, ops: gns.OperatorTuple) -> int:
    cfg = run.cfg
    h, e = run.h, run.e
    rep = gns.verify_representation(h, e, ops, cfg.samples, cfg.seed, cfg.boundary_tol)
    try:
        rep = gns.factor_and_cone_check(h, e, ops, samples=cfg.cone_samples, seed=cfg.seed,
                                        tol=cfg.boundary_tol, report=rep)
    except (gns.GnsError, poly.PolyError) as ex:
        run.report["verify"] = rep.to_json() | {"error": str(ex)}
        print(f"verification failed: {ex}")
        return EXIT_VERIFY
    checks = {
        "e_identity": rep.e_identity_residual <= cfg.verify_tol,
        "line_identity": rep.ch_residual <= cfg.verify_tol,
        "interior_positive": rep.interior_min_eig >= -cfg.verify_tol,
        "divisible": rep.divide_residual is not None and rep.divide_residual <= cfg.verify_tol,
        "cone_agreement": rep.cone_agreement == 1.0,
    }
    run.report["verify"] = rep.to_json() | {"checks": checks}
    print(f"|e.M - I| = {rep.e_identity_residual:.2e}, max |h(a.M)v| = {rep.ch_residual:.2e}, "
          f"divide residual = {rep.divide_residual:.2e}, cone agreement = {rep.cone_agreement:.1%}")
    print(f"g = {rep.g}")
    print(f"f = {rep.f}")
    if not all(checks.values()):
        print("verification failed: " + ", ".join(k for k, v in checks.items() if not v))
        return EXIT_VERIFY
    return EXIT_OK


def cmd_verify(run: Run) -> int:
    run.load()
    ops_file = run.cfg.extra.get("ops")
    if ops_file:
        try:
            ops = gns.OperatorTuple.from_json(json.loads(Path(ops_file).read_text()))
        except (OSError, ValueError, KeyError) as ex:
            raise InputError(f"cannot read operators: {ex}") from None
        if ops.n != run.h.nvars:
            raise InputError(f"operator file has n = {ops.n}, polynomial has {run.h.nvars} variables")
    else:
        mp = _build(run)
        sol = _solve(run, mp)
        code = _status_exit(sol)
        if code is not None:
            return code
        ops = _operators(run, mp, sol)
    return _verify(run, ops)


def cmd_pipeline(run: Run) -> int:
    h, e = run.load()
    chk = poly.is_hyperbolic(h, e, run.cfg.trials, run.cfg.seed)
    run.report["check"] = {"hyperbolic": chk.verdict, "trials": chk.trials,
                           "witness": None if chk.witness is None else chk.witness.tolist()}
    if not chk.verdict:
        print(f"not hyperbolic: witness a = {chk.witness.tolist()}; refusing to build the program")
        run.report["status"] = "NotHyperbolic"
        return EXIT_WITNESS
    mp = _build(run)
    if run.cfg.export:
        text, side = moment.export_program(mp)
        Path(run.cfg.export).write_text(text)
        sidecar_path(Path(run.cfg.export)).write_text(json.dumps(_to_json(side), indent=2, sort_keys=True) + "\n")
    sol = _solve(run, mp)
    code = _status_exit(sol)
    if code is not None:
        return code
    try:
        ops = _operators(run, mp, sol)
    except gns.GnsError as ex:
        run.report["gns"] = {"error": str(ex)}
        print(f"GNS step failed: {ex}")
        return EXIT_VERIFY
    run.report["operators"] = ops.to_json({"rank_tol": run.cfg.rank_tol, "k": mp.k})
    return _verify(run, ops)


COMMANDS = {"check": cmd_check, "member": cmd_member, "hermite": cmd_hermite, "program": cmd_program,
            "solve": cmd_solve, "gns": cmd_gns, "verify": cmd_verify, "pipeline": cmd_pipeline}


def _vector(text, flag) -> np.ndarray:
    if text is None:
        raise InputError(f"{flag} is required")
    try:
        return poly.parse_vector(text)
    except poly.PolyError as ex:
        raise InputError(f"{flag}: {ex}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-p", "--poly", dest="poly_path", help="file holding the polynomial (or - for stdin)")
    common.add_argument("-e", "--direction", help="hyperbolicity direction, e.g. 1,0,0")
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--tol", type=float, default=sdp.DEFAULT_TOL, help="SDP tolerance")
    common.add_argument("--max-iter", type=int, default=sdp.DEFAULT_MAX_ITER)
    common.add_argument("--boundary-tol", type=float, default=1e-6)
    common.add_argument("--verify-tol", type=float, default=1e-6)
    common.add_argument("--rank-tol", type=float, default=1e-7)
    common.add_argument("--trials", type=int, default=200)
    common.add_argument("--json", dest="json_out", help="write the JSON report here")
    common.add_argument("-v", "--verbose", action="store_true")

    program = argparse.ArgumentParser(add_help=False)
    program.add_argument("--trace", action="store_true", help="add trace constraints")
    program.add_argument("--k", type=int, help="override the truncation level")
    program.add_argument("--export", help="write the SDPA program here (plus an .index.json sidecar)")

    parser = argparse.ArgumentParser(prog="hypclif", description="Determinantal representations of hyperbolic polynomials via moment programs.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("check", parents=[common], help="randomized hyperbolicity test")
    p = sub.add_parser("member", parents=[common], help="hyperbolicity cone membership of a point")
    p.add_argument("--at", required=True)
    p = sub.add_parser("hermite", parents=[common], help="Hermite matrix of h(x - t e)")
    p.add_argument("--sos", action="store_true", help="search for a matrix sum-of-squares certificate")
    p.add_argument("--at")
    sub.add_parser("program", parents=[common, program], help="build (and export) the moment program")
    p = sub.add_parser("solve", parents=[common, program], help="solve the moment program or an SDPA file")
    p.add_argument("sdpa", nargs="?", help="SDPA file to solve instead of building the program")
    p = sub.add_parser("gns", parents=[common, program], help="extract operators")
    p.add_argument("--out", dest="ops_out", help="write operators.json here")
    p = sub.add_parser("verify", parents=[common, program], help="verify extracted operators")
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--cone-samples", type=int, default=1000)
    p.add_argument("--ops", help="operators.json to verify instead of running the pipeline")
    p = sub.add_parser("pipeline", parents=[common, program], help="check, program, solve, gns, verify")
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--cone-samples", type=int, default=1000)
    p.add_argument("--out", dest="ops_out")
    return parser


def config_from_args(args: argparse.Namespace) -> PipelineConfig:
    direction = None
    if args.direction is not None:
        direction = [float(v) for v in _vector(args.direction, "-e")]
    extra = {k: getattr(args, k) for k in ("at", "sos", "sdpa", "ops", "ops_out") if getattr(args, k, None) is not None}
    cfg = PipelineConfig(
        poly_path=args.poly_path, direction=direction, k=getattr(args, "k", None),
        mode=moment.TRACE if getattr(args, "trace", False) else moment.PLAIN,
        tol=args.tol, max_iter=args.max_iter, rank_tol=args.rank_tol, boundary_tol=args.boundary_tol,
        verify_tol=args.verify_tol, seed=args.seed, trials=args.trials,
        samples=getattr(args, "samples", 200), cone_samples=getattr(args, "cone_samples", 1000),
        json_out=args.json_out, export=getattr(args, "export", None), extra=extra)
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
    except (InputError, ValueError) as ex:
        print(f"error: {ex}", file=sys.stderr)
        return EXIT_INPUT
    run = Run(cfg, args.command)
    try:
        code = COMMANDS[args.command](run)
    except InputError as ex:
        print(f"error: {ex}", file=sys.stderr)
        run.report["error"] = str(ex)
        code = EXIT_INPUT
    except sdp.SdpError as ex:
        print(f"error: {ex}", file=sys.stderr)
        run.report["error"] = str(ex)
        code = EXIT_INDETERMINATE
    run.report["exit_code"] = code
    run.write()
    return code


if __name__ == "__main__":
    sys.exit(main())
