"""Command-line interface: solve, generate, and verify scaling instances.

Exit codes: 0 scaled / checks passed, 1 I/O or numeric failure, 2 a verify
check failed, 3 infeasible (certificate written in the result document).
All indices in output are 0-based.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import generate, io, rational
from .errors import ScalingError
from .linalg import Frame, leverage_scores, numerical_rank
from .matrixscale import MatrixMarginals, NonnegMatrix, column_sums, scale_matrix
from .solver import CERTIFICATE_TOL, Marginals, ScalingResult, SolverConfig, scale_frame

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VERIFY_FAILED = 2
EXIT_INFEASIBLE = 3


def _solver_config(args) -> SolverConfig:
    return SolverConfig(
        max_iters=args.max_iters,
        regularize=not args.no_regularize,
        collect_trace=args.trace is not None,
    )


def _emit(result: ScalingResult, kind: str, echo: dict, args) -> int:
    doc = io.result_document(result, kind=kind, config_echo=echo,
                             include_trace=args.trace is not None)
    io.write_result(doc, args.out)
    if args.trace is not None:
        io.write_trace_jsonl(args.trace, result.trace)
    if result.scaled:
        return EXIT_OK
    print(f"infeasible: certificate columns {sorted(int(i) for i in result.certificate)}",
          file=sys.stderr)
    return EXIT_INFEASIBLE


def cmd_frame(args) -> int:
    try:
        frame = Frame(io.read_matrix_file(args.input))
        marg = Marginals(io.read_vector_file(args.marginals), d=frame.d)
        config = _solver_config(args)
        echo = {"eps": args.eps, "max_iters": config.iteration_cap(frame.n, args.eps),
                "regularize": config.regularize}
        result = scale_frame(frame, marg, args.eps, config)
    except (OSError, ValueError, ScalingError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return _emit(result, "frame", echo, args)


def cmd_matrix(args) -> int:
    try:
        matrix = NonnegMatrix(io.read_matrix_file(args.input))
        marg = MatrixMarginals(io.read_vector_file(args.rows),
                               io.read_vector_file(args.cols))
        config = _solver_config(args)
        echo = {"eps": args.eps, "max_iters": config.iteration_cap(matrix.n, args.eps),
                "regularize": config.regularize}
        result = scale_matrix(matrix, marg, args.eps, config)
    except (OSError, ValueError, ScalingError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return _emit(result, "matrix", echo, args)


def cmd_gen(args) -> int:
    try:
        if args.kind == "gaussian":
            U, c = generate.gen_gaussian(args.d, args.n, args.seed)
            io.write_matrix_file(f"{args.out}.U.txt", U)
            io.write_vector_file(f"{args.out}.c.txt", c)
        elif args.kind == "infeasible":
            U, c = generate.gen_infeasible(args.d, args.n, args.seed)
            io.write_matrix_file(f"{args.out}.U.txt", U)
            io.write_vector_file(f"{args.out}.c.txt", c)
        else:
            A, r, c = generate.gen_bipartite(args.m, args.n, args.seed)
            io.write_matrix_file(f"{args.out}.A.txt", A)
            io.write_vector_file(f"{args.out}.r.txt", r)
            io.write_vector_file(f"{args.out}.c.txt", c)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK


class _CheckFailed(Exception):
    pass


def _require(name: str, ok: bool):
    if not ok:
        raise _CheckFailed(name)


def _verify_frame(args, doc) -> None:
    U = io.read_matrix_file(args.input)
    c = io.read_vector_file(args.marginals)
    eps = float(doc["config"]["eps"])
    if doc["status"] == "scaled":
        z = np.asarray(doc["z"], dtype=np.float64)
        _require("scaling_positive", z.size == U.shape[1] and bool(np.all(z > 0)))
        lev = leverage_scores(Frame(U), z)
        err_sq = float(((lev - c) ** 2).sum())
        _require("error_within_eps", err_sq <= eps * eps * (1.0 + 1e-9))
        _require("error_matches_document",
                 abs(err_sq - float(doc["final_error_sq"]))
                 <= 1e-9 * max(eps * eps, err_sq))
    else:
        T = sorted(int(i) for i in doc["certificate"])
        _require("certificate_nonempty", len(T) >= 1)
        _require("certificate_indices", all(0 <= j < U.shape[1] for j in T))
        d, n = U.shape
        if d <= 6 and n <= 12:
            rows = rational.parse_matrix_tokens(args.input)
            cq = rational.parse_vector_tokens(args.marginals)
            mass = sum(cq[j] for j in T)
            rank = rational.rational_rank(rational.column_submatrix(rows, T))
            _require("certificate_rational_rank", mass > rank)
        else:
            mass = float(c[T].sum())
            rank = numerical_rank(U[:, T])
            _require("certificate_float_rank", rank < mass - CERTIFICATE_TOL)


def _verify_matrix(args, doc) -> None:
    A = io.read_matrix_file(args.input)
    r = io.read_vector_file(args.rows)
    c = io.read_vector_file(args.cols)
    eps = float(doc["config"]["eps"])
    matrix = NonnegMatrix(A)
    if doc["status"] == "scaled":
        y = np.asarray(doc["y"], dtype=np.float64)
        _require("scaling_positive", y.size == A.shape[1] and bool(np.all(y > 0)))
        cs = column_sums(matrix, r, y)
        x = r / (A @ y)
        err_sq = float(((x * (A @ y) - r) ** 2).sum() + ((cs - c) ** 2).sum())
        _require("error_within_eps", err_sq <= eps * eps * (1.0 + 1e-9))
        _require("error_matches_document",
                 abs(err_sq - float(doc["final_error_sq"]))
                 <= 1e-9 * max(eps * eps, err_sq))
    else:
        T = sorted(int(i) for i in doc["certificate"])
        _require("certificate_nonempty", len(T) >= 1)
        _require("certificate_indices", all(0 <= j < A.shape[1] for j in T))
        rows = rational.parse_matrix_tokens(args.input)
        rq = rational.parse_vector_tokens(args.rows)
        cq = rational.parse_vector_tokens(args.cols)
        nbr = sorted({i for i in range(len(rows)) if any(rows[i][j] != 0 for j in T)})
        _require("certificate_hall_violation",
                 sum(cq[j] for j in T) > sum(rq[i] for i in nbr))


def cmd_verify(args) -> int:
    try:
        doc = io.read_result(args.result)
        if args.rows is not None or args.cols is not None:
            if args.rows is None or args.cols is None:
                raise ValueError("matrix verification needs both --rows and --cols")
            _verify_matrix(args, doc)
        else:
            if args.marginals is None:
                raise ValueError("frame verification needs --marginals")
            _verify_frame(args, doc)
    except _CheckFailed as exc:
        print(f"verify failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY_FAILED
    except (OSError, ValueError, KeyError, ScalingError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="framescale")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--eps", type=float, required=True, help="target error")
        p.add_argument("--out", default=None, help="result JSON path (default stdout)")
        p.add_argument("--trace", default=None, help="per-iteration trace JSONL path")
        p.add_argument("--max-iters", type=int, default=None, dest="max_iters")
        p.add_argument("--no-regularize", action="store_true", dest="no_regularize")

    p = sub.add_parser("frame", help="scale a frame to target marginals")
    p.add_argument("--input", required=True, help="frame file: 'd n' header + rows")
    p.add_argument("--marginals", required=True, help="marginals file")
    add_common(p)
    p.set_defaults(func=cmd_frame)

    p = sub.add_parser("matrix", help="scale a nonnegative matrix to (r, c)")
    p.add_argument("--input", required=True)
    p.add_argument("--rows", required=True, help="row-sum targets file")
    p.add_argument("--cols", required=True, help="column-sum targets file")
    add_common(p)
    p.set_defaults(func=cmd_matrix)

    p = sub.add_parser("gen", help="generate a seeded instance")
    p.add_argument("kind", choices=["gaussian", "infeasible", "bipartite"])
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output path prefix")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("verify", help="re-check a result document")
    p.add_argument("--result", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--marginals", default=None)
    p.add_argument("--rows", default=None)
    p.add_argument("--cols", default=None)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "gen":
        if args.kind in ("gaussian", "infeasible") and args.d is None:
            print("error: gen gaussian/infeasible requires --d", file=sys.stderr)
            return EXIT_ERROR
        if args.kind == "bipartite" and args.m is None:
            print("error: gen bipartite requires --m", file=sys.stderr)
            return EXIT_ERROR
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
