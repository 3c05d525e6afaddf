"""Command line interface: ``fitted-bvp {mesh,solve,study,validate}``."""

from __future__ import annotations

import argparse
import logging
import re
import sys

from .errors import FittedBVPError
from .harness import StudyConfig, emit_table, run_convergence_study, solution_csv
from .mesh import MeshParams, build_mesh
from .problem import BUILTIN_PROBLEMS, get_problem, validate_problem
from .scheme import SchemeParams
from .solver import NewtonConfig, newton_solve

_POW2 = re.compile(r"^\s*2\s*(?:\^|\*\*)\s*\(?\s*(-?\d+)\s*\)?\s*$")

DEFAULT_GAMMA = {"example1": 1.0, "example2": 4.0}
DEFAULT_P = {"example1": 0.4, "example2": 0.3}


def parse_epsilon(text: str) -> float:
    """Parse ``2^-10``, ``2**-10`` or a decimal number."""
    m = _POW2.match(text)
    if m:
        return 2.0 ** int(m.group(1))
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse epsilon {text!r}") from None


def parse_eps_list(text: str) -> tuple[float, ...]:
    return tuple(parse_epsilon(t) for t in text.split(",") if t.strip())


def parse_n_list(text: str) -> tuple[int, ...]:
    out = []
    for t in text.split(","):
        t = t.strip()
        if not t:
            continue
        m = _POW2.match(t)
        out.append(2 ** int(m.group(1)) if m else int(t))
    return tuple(out)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--problem", choices=sorted(BUILTIN_PROBLEMS), default="example1")
    p.add_argument("--gamma", type=float, default=None,
                   help="fitting constant (default: 1 for example1, 4 for example2)")
    p.add_argument("--q", type=float, default=4.0)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--p", type=float, default=None,
                   help="mesh transition parameter (default: 0.4 for example1, 0.3 for example2)")
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--residual-tol", type=float, default=1e-12)
    p.add_argument("--max-iter", type=int, default=50)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fitted-bvp", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mesh", help="print mesh nodes as CSV i,t_i,x_i,h_i")
    p.add_argument("--epsilon", type=parse_epsilon, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--p", type=float, default=0.4)

    p = sub.add_parser("solve", help="solve one problem and print CSV i,x_i,y_i")
    _add_common(p)
    p.add_argument("--epsilon", type=parse_epsilon, required=True)
    p.add_argument("--n", type=int, required=True)

    p = sub.add_parser("study", help="run a convergence study and print the table")
    _add_common(p)
    p.add_argument("--eps-list", type=parse_eps_list, required=True)
    p.add_argument("--n-list", type=parse_n_list,
                   default=tuple(2 ** k for k in range(6, 14)))
    p.add_argument("--reference-n", type=int, default=16384)
    p.add_argument("--format", choices=["csv", "md"], default="csv")
    p.add_argument("--cache-dir", default=None)
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("validate", help="check gamma >= f_y >= m on the solution box")
    p.add_argument("--problem", choices=sorted(BUILTIN_PROBLEMS), default="example1")
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--grid", type=int, default=101)
    return parser


def _newton(args) -> NewtonConfig:
    return NewtonConfig(tol=args.tol, residual_tol=args.residual_tol, max_iter=args.max_iter)


def _defaults(args) -> None:
    if getattr(args, "gamma", None) is None:
        args.gamma = DEFAULT_GAMMA[args.problem]
    if hasattr(args, "p") and args.p is None:
        args.p = DEFAULT_P[args.problem]


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = sys.stdout
    try:
        if args.command == "mesh":
            mesh = build_mesh(MeshParams(args.epsilon, args.p, args.a, args.n))
            out.write("i,t_i,x_i,h_i\n")
            h = mesh.h
            for i, x in enumerate(mesh.nodes):
                hi = f"{h[i]:.17g}" if i < mesh.N else ""
                out.write(f"{i},{i / mesh.N:.17g},{x:.17g},{hi}\n")
            return 0

        _defaults(args)
        if args.command == "validate":
            rep = validate_problem(get_problem(args.problem), args.gamma, args.grid)
            print(f"problem={args.problem} gamma={args.gamma} grid={rep.grid[0]}x{rep.grid[1]}")
            print(f"f_y range on box: [{rep.f_y_min:.6g}, {rep.f_y_max:.6g}]")
            print(f"gamma >= f_y: {'pass' if rep.gamma_ok else 'FAIL'}"
                  f" (worst sample x={rep.worst_gamma_sample[0]:.4g},"
                  f" y={rep.worst_gamma_sample[1]:.4g}, f_y={rep.worst_gamma_sample[2]:.6g})")
            print(f"f_y >= m: {'pass' if rep.m_ok else 'FAIL'}")
            print(f"f_y finite-difference check: max rel error {rep.fd_max_rel_error:.2e}")
            return 0 if rep.passed else 1

        if args.command == "solve":
            problem = get_problem(args.problem)
            mesh = build_mesh(MeshParams(args.epsilon, args.p, args.a, args.n))
            sp = SchemeParams.for_epsilon(args.gamma, args.q, args.epsilon)
            sol = newton_solve(problem, mesh, sp, _newton(args))
            logging.getLogger(__name__).info("converged in %d iterations", sol.iterations)
            out.write(solution_csv(sol))
            return 0

        if args.command == "study":
            cfg = StudyConfig(
                problem=args.problem, epsilons=args.eps_list, Ns=args.n_list,
                gamma=args.gamma, q=args.q, a=args.a, p=args.p, newton=_newton(args),
                reference_N=args.reference_n, cache_dir=args.cache_dir,
            )
            table = run_convergence_study(cfg, jobs=args.jobs)
            out.write(emit_table(table, args.format))
            return 1 if table.failed else 0
    except FittedBVPError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
