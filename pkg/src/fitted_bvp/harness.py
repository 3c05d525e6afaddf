"""Convergence studies: errors E_N, observed orders and table output."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import FittedBVPError, MeshMismatchError, MissingExactError
from .mesh import MeshParams, build_mesh
from .problem import Problem, get_problem
from .scheme import SchemeParams
from .solver import NewtonConfig, Solution, newton_solve

logger = logging.getLogger(__name__)


def error_against_exact(sol: Solution, exact) -> float:
    """Max-norm nodal error ``max_i |y(x_i) - y_i|``.

    ``exact`` is called as ``exact(x, eps, one_minus_x=...)`` so that the
    right boundary layer is resolved even when ``x_i`` rounds to 1.
    """
    if exact is None:
        raise MissingExactError("problem has no closed-form solution")
    mesh = sol.mesh
    y = exact(mesh.nodes, mesh.epsilon, one_minus_x=mesh.complement)
    return float(np.max(np.abs(np.asarray(y) - sol.values)))


def error_against_reference(sol: Solution, ref: Solution) -> float:
    """Max-norm difference to a fine-mesh solution at the shared nodes.

    Raises:
        MeshMismatchError: if N does not divide the reference N or the coarse
            nodes do not coincide with every ``ref.N/N``-th reference node.
    """
    n, nref = sol.mesh.N, ref.mesh.N
    if nref % n:
        raise MeshMismatchError(f"N={n} does not divide reference N={nref}")
    stride = nref // n
    for a, b in ((sol.mesh.nodes, ref.mesh.nodes[::stride]),
                 (sol.mesh.complement, ref.mesh.complement[::stride])):
        tol = 4.0 * np.spacing(np.maximum(np.abs(a), np.abs(b)))
        if not np.all(np.abs(a - b) <= tol):
            k = int(np.argmax(np.abs(a - b) - tol))
            raise MeshMismatchError(f"node {k} differs: {a[k]!r} vs {b[k]!r}")
    return float(np.max(np.abs(ref.values[::stride] - sol.values)))


def order(e_n: float, e_2n: float) -> float:
    """Observed order ``(ln E_N - ln E_2N) / ln 2``."""
    if not (e_n > 0 and e_2n > 0):
        raise ValueError(f"errors must be positive, got {e_n}, {e_2n}")
    return (math.log(e_n) - math.log(e_2n)) / math.log(2.0)


@dataclass(frozen=True)
class StudyConfig:
    problem: str
    epsilons: tuple[float, ...]
    Ns: tuple[int, ...]
    gamma: float
    q: float = 4.0
    a: float = 1.0
    p: float = 0.4
    newton: NewtonConfig = field(default_factory=NewtonConfig)
    reference_N: int = 16384
    use_reference: bool | None = None
    cache_dir: str | None = None

    def __post_init__(self):
        if any(n % 2 or n < 4 for n in self.Ns):
            raise ValueError("every N must be even and >= 4")
        if self.needs_reference() and any(self.reference_N % n for n in self.Ns):
            raise ValueError(f"every N must divide reference_N={self.reference_N}")

    def needs_reference(self) -> bool:
        if self.use_reference is not None:
            return self.use_reference
        return get_problem(self.problem).exact is None


@dataclass(frozen=True)
class Cell:
    epsilon: float
    N: int
    error: float | None
    order: float | None = None
    clamped: bool = False
    iterations: int | None = None
    failure: str | None = None

    @property
    def failed(self) -> bool:
        return self.failure is not None


@dataclass
class ConvergenceTable:
    """Rows ordered by epsilon (as configured) then by N."""

    rows: list[Cell] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    @property
    def failed(self) -> bool:
        return any(c.failed for c in self.rows)

    def column(self, epsilon: float) -> list[Cell]:
        return [c for c in self.rows if c.epsilon == epsilon]

    def cell(self, epsilon: float, N: int) -> Cell:
        for c in self.rows:
            if c.epsilon == epsilon and c.N == N:
                return c
        raise KeyError((epsilon, N))


def _solve(problem: Problem, eps: float, N: int, cfg: StudyConfig) -> Solution:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        mesh = build_mesh(MeshParams(eps, cfg.p, cfg.a, N))
    return newton_solve(problem, mesh, SchemeParams.for_epsilon(cfg.gamma, cfg.q, eps),
                        cfg.newton)


def reference_key(problem: str, eps: float, cfg: StudyConfig) -> dict:
    nc = cfg.newton
    return {
        "problem": problem, "epsilon": eps.hex(), "N": cfg.reference_N,
        "p": cfg.p, "a": cfg.a, "gamma": cfg.gamma, "q": cfg.q,
        "tol": nc.tol, "residual_tol": nc.residual_tol, "max_iter": nc.max_iter,
    }


def reference_cache(path, eps: float, cfg: StudyConfig) -> Solution:
    """Load the reference solution for ``eps`` from ``path`` or compute and store it.

    Files are CSV ``i,x_i,y_i`` at 17 significant digits after a ``#``
    JSON header holding the full parameter key.  A file that cannot be
    parsed or disagrees with the rebuilt mesh is recomputed with a warning.
    """
    key = reference_key(cfg.problem, eps, cfg)
    digest = hashlib.sha256(json.dumps(key, sort_keys=True).encode()).hexdigest()[:16]
    path = Path(path)
    fname = path / f"ref_{cfg.problem}_{digest}.csv"
    problem = get_problem(cfg.problem)
    if fname.exists():
        try:
            return _load_reference(fname, key, eps, cfg)
        except (ValueError, KeyError, IndexError, MeshMismatchError) as exc:
            warnings.warn(f"corrupt reference cache {fname}: {exc}; recomputing", stacklevel=2)
    sol = _solve(problem, eps, cfg.reference_N, cfg)
    path.mkdir(parents=True, exist_ok=True)
    tmp = fname.with_suffix(".tmp")
    with open(tmp, "w", newline="") as fh:
        fh.write("# " + json.dumps({**key, "iterations": sol.iterations}, sort_keys=True) + "\n")
        fh.write(solution_csv(sol))
    tmp.replace(fname)
    return sol


def _load_reference(fname: Path, key: dict, eps: float, cfg: StudyConfig) -> Solution:
    with open(fname) as fh:
        header = fh.readline()
        if not header.startswith("# "):
            raise ValueError("missing header")
        meta = json.loads(header[2:])
        if any(meta.get(k) != v for k, v in key.items()):
            raise ValueError("parameter header does not match")
        rows = list(csv.reader(fh))
    if rows[0] != ["i", "x_i", "y_i"]:
        raise ValueError("bad column header")
    data = np.array([[float(v) for v in r] for r in rows[1:]])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        mesh = build_mesh(MeshParams(eps, cfg.p, cfg.a, cfg.reference_N))
    if data.shape != (mesh.N + 1, 3) or not np.array_equal(data[:, 0], np.arange(mesh.N + 1)):
        raise ValueError("wrong number of rows")
    if not np.array_equal(data[:, 1], mesh.nodes):
        raise MeshMismatchError("stored nodes differ from the rebuilt mesh")
    values = data[:, 2]
    if not np.all(np.isfinite(values)):
        raise ValueError("non-finite values")
    values.setflags(write=False)
    return Solution(mesh=mesh, values=values, iterations=int(meta["iterations"]),
                    final_step_norm=float("nan"), final_residual_norm=float("nan"),
                    converged=True)


def solution_csv(sol: Solution) -> str:
    buf = io.StringIO()
    buf.write("i,x_i,y_i\n")
    for i, (x, y) in enumerate(zip(sol.mesh.nodes, sol.values)):
        buf.write(f"{i},{x:.17g},{y:.17g}\n")
    return buf.getvalue()


def _run_epsilon(cfg: StudyConfig, eps: float) -> list[Cell]:
    problem = get_problem(cfg.problem)
    clamped = cfg.p - float(np.cbrt(eps)) <= 0.0
    ref = None
    ref_failure = None
    if cfg.needs_reference():
        try:
            if cfg.cache_dir:
                ref = reference_cache(cfg.cache_dir, eps, cfg)
            else:
                ref = _solve(problem, eps, cfg.reference_N, cfg)
        except FittedBVPError as exc:
            ref_failure = f"reference: {exc}"
    cells = []
    for N in cfg.Ns:
        if ref_failure:
            cells.append(Cell(eps, N, None, clamped=clamped, failure=ref_failure))
            continue
        try:
            sol = _solve(problem, eps, N, cfg)
            err = (error_against_reference(sol, ref) if ref is not None
                   else error_against_exact(sol, problem.exact))
            cells.append(Cell(eps, N, err, clamped=clamped, iterations=sol.iterations))
        except FittedBVPError as exc:
            logger.warning("cell eps=%g N=%d failed: %s", eps, N, exc)
            cells.append(Cell(eps, N, None, clamped=clamped, failure=str(exc)))
    out = []
    for k, c in enumerate(cells):
        ordv = None
        if k + 1 < len(cells) and cells[k + 1].N == 2 * c.N:
            e1, e2 = c.error, cells[k + 1].error
            if e1 is not None and e2 is not None and e1 > 0 and e2 > 0:
                ordv = order(e1, e2)
        out.append(Cell(c.epsilon, c.N, c.error, ordv, c.clamped, c.iterations, c.failure))
    return out


def run_convergence_study(cfg: StudyConfig, jobs: int = 1) -> ConvergenceTable:
    """Solve every (eps, N) cell and collect E_N and Ord.

    Epsilon columns run in parallel when ``jobs > 1``; the rows come back
    in configuration order regardless.  Failed cells are recorded, not
    raised.
    """
    Ns = tuple(sorted(cfg.Ns))
    if Ns != cfg.Ns:
        cfg = StudyConfig(**{**_fields(cfg), "Ns": Ns})
    if jobs > 1 and len(cfg.epsilons) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            columns = list(pool.map(_run_epsilon, [cfg] * len(cfg.epsilons), cfg.epsilons))
    else:
        columns = [_run_epsilon(cfg, eps) for eps in cfg.epsilons]
    meta = _fields(cfg)
    meta["newton"] = asdict(cfg.newton)
    meta["reference"] = cfg.needs_reference()
    meta["clamped"] = {eps: col[0].clamped for eps, col in zip(cfg.epsilons, columns) if col}
    return ConvergenceTable(rows=[c for col in columns for c in col], metadata=meta)


def _fields(cfg: StudyConfig) -> dict:
    return {f: getattr(cfg, f) for f in cfg.__dataclass_fields__}


def format_epsilon(eps: float) -> str:
    m, e = math.frexp(eps)
    if m == 0.5:
        return f"2^{e - 1}"
    return f"{eps:.6g}"


def emit_table(table: ConvergenceTable, fmt: str = "csv") -> str:
    """Render as CSV (``epsilon,N,E_N,Ord``) or a Markdown grid (one column pair per eps)."""
    if fmt == "csv":
        lines = ["epsilon,N,E_N,Ord"]
        for c in table.rows:
            err = "failed" if c.failed else f"{c.error:.4e}"
            ordv = "-" if c.order is None else f"{c.order:.2f}"
            lines.append(f"{format_epsilon(c.epsilon)},{c.N},{err},{ordv}")
        return "\n".join(lines) + "\n"
    if fmt in ("md", "markdown"):
        epss = list(dict.fromkeys(c.epsilon for c in table.rows))
        Ns = sorted({c.N for c in table.rows})
        head = "| N | " + " | ".join(
            f"E_N eps={format_epsilon(e)}{' (clamped)' if table.column(e)[0].clamped else ''} | Ord"
            for e in epss) + " |"
        lines = [head, "|" + "---|" * (1 + 2 * len(epss))]
        for N in Ns:
            parts = [f"2^{int(math.log2(N))}" if N & (N - 1) == 0 else str(N)]
            for e in epss:
                try:
                    c = table.cell(e, N)
                except KeyError:
                    parts += ["", ""]
                    continue
                parts.append("failed" if c.failed else f"{c.error:.4e}")
                parts.append("-" if c.order is None else f"{c.order:.2f}")
            lines.append("| " + " | ".join(parts) + " |")
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown format {fmt!r}")
