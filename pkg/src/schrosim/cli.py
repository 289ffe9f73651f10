"""Command-line surface: ingest Matrix Market matrices and JSON vectors,
run the solve / eig / evolve / diagnose pipelines, and emit deterministic
JSON reports (stable key order, newline-terminated)."""

from __future__ import annotations

import json
import sys
import time
from dataclasses import dataclass, field

import click
import numpy as np

from . import __version__, baselines, core, schrodingerization as engine, solvers
from .errors import InvalidInputError, ParseError, SchrosimError

_HEADER_FIELDS = {"real", "complex"}
_HEADER_SYMMETRY = {"general", "symmetric"}


def read_matrix_market(path: str) -> np.ndarray:
    """Parse a coordinate-format Matrix Market file into a dense matrix.

    Accepts real|complex fields and general|symmetric symmetry; symmetric
    files are mirrored. Malformed input raises ParseError with the
    offending 1-based line number.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError("empty file", line=1)
    header = lines[0].split()
    if (
        len(header) != 5
        or header[0] != "%%MatrixMarket"
        or header[1].lower() != "matrix"
        or header[2].lower() != "coordinate"
    ):
        raise ParseError(
            "expected header '%%MatrixMarket matrix coordinate <field> <symmetry>'",
            line=1,
        )
    fld, sym = header[3].lower(), header[4].lower()
    if fld not in _HEADER_FIELDS:
        raise ParseError(f"unsupported field {fld!r}", line=1)
    if sym not in _HEADER_SYMMETRY:
        raise ParseError(f"unsupported symmetry {sym!r}", line=1)

    lineno = 1
    size = None
    M = None
    seen_nnz = 0
    expected_nnz = 0
    for raw in lines[1:]:
        lineno += 1
        stripped = raw.strip()
        if not stripped or stripped.startswith("%"):
            continue
        parts = stripped.split()
        if size is None:
            if len(parts) != 3:
                raise ParseError("size line must be 'rows cols nnz'", line=lineno)
            try:
                rows, cols, expected_nnz = (int(x) for x in parts)
            except ValueError:
                raise ParseError("size line must contain integers", line=lineno)
            if rows < 1 or cols < 1 or expected_nnz < 0:
                raise ParseError("invalid matrix dimensions", line=lineno)
            size = (rows, cols)
            M = np.zeros(size, dtype=complex)
            continue
        want = 4 if fld == "complex" else 3
        if len(parts) != want:
            raise ParseError(
                f"expected {want} fields for a {fld} entry", line=lineno
            )
        try:
            i, j = int(parts[0]), int(parts[1])
            if fld == "complex":
                val = complex(float(parts[2]), float(parts[3]))
            else:
                val = complex(float(parts[2]))
        except ValueError:
            raise ParseError("malformed entry", line=lineno)
        if not (1 <= i <= size[0] and 1 <= j <= size[1]):
            raise ParseError(f"index ({i}, {j}) out of range", line=lineno)
        M[i - 1, j - 1] = val
        if sym == "symmetric" and i != j:
            M[j - 1, i - 1] = val
        seen_nnz += 1
    if size is None:
        raise ParseError("missing size line", line=lineno)
    if seen_nnz != expected_nnz:
        raise ParseError(
            f"entry count {seen_nnz} does not match declared {expected_nnz}",
            line=lineno,
        )
    return M


def write_matrix_market(M: np.ndarray) -> str:
    """Serialise a dense matrix as coordinate Matrix Market text that
    read_matrix_market parses back to the same matrix."""
    M = core.as_matrix(M)
    entries = [
        (i + 1, j + 1, M[i, j])
        for i in range(M.shape[0])
        for j in range(M.shape[1])
        if M[i, j] != 0
    ]
    lines = [
        "%%MatrixMarket matrix coordinate complex general",
        f"{M.shape[0]} {M.shape[1]} {len(entries)}",
    ]
    lines += [f"{i} {j} {float(v.real)!r} {float(v.imag)!r}" for i, j, v in entries]
    return "\n".join(lines) + "\n"


def read_vector(path: str) -> np.ndarray:
    """JSON array of numbers or [real, imag] pairs."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", line=exc.lineno)
    if not isinstance(data, list) or not data:
        raise ParseError("vector file must hold a nonempty JSON array", line=1)
    out = np.zeros(len(data), dtype=complex)
    for idx, item in enumerate(data):
        if isinstance(item, (int, float)):
            out[idx] = item
        elif (
            isinstance(item, list)
            and len(item) == 2
            and all(isinstance(x, (int, float)) for x in item)
        ):
            out[idx] = complex(item[0], item[1])
        else:
            raise ParseError(f"entry {idx} must be a number or [real, imag] pair")
    return out


@dataclass
class RunConfig:
    command: str
    matrix_path: str
    rhs_path: str | None = None
    x0_path: str | None = None
    method: str = "jacobi"
    a: float | None = None
    N: int = 512
    L: float | None = None
    t: str | float | None = "auto"
    delta: float = 1e-3
    epsilon: float = 0.1
    recovery: str = "sum_positive"
    pstar: float = engine.DEFAULT_PSTAR
    alpha0_sq: float = 0.5
    output_path: str | None = None
    seed: int | None = None
    override_convergence: bool = False
    show_overlaps: bool = False
    timing: bool = False


def _pairs(v: np.ndarray) -> list:
    return [[float(z.real), float(z.imag)] for z in v]


def _base_report(cfg: RunConfig, M: np.ndarray) -> dict:
    return {
        "command": cfg.command,
        "version": __version__,
        "seed": cfg.seed,
        "matrix_mm": write_matrix_market(M),
        "wall_time_seconds": None,
    }


def _grid_section(grid: engine.Grid) -> dict:
    return {"N": grid.N, "L": grid.L}

def _cost_section(cost: solvers.CostReport) -> dict:
    return {
        "sparsity": cost.sparsity,
        "max_norm": cost.max_norm,
        "t": cost.t,
        "epsilon": cost.epsilon,
        "overlap": cost.overlap,
        "predicted_query_scale": cost.predicted_query_scale,
        "retrieval_factor": cost.retrieval_factor,
    }


def _explicit_time(cfg: RunConfig) -> float | None:
    if cfg.t in (None, "auto"):
        return None
    return float(cfg.t)


def run_solve(cfg: RunConfig) -> dict:
    A = read_matrix_market(cfg.matrix_path)
    if cfg.rhs_path is None:
        raise InvalidInputError("solve requires --rhs")
    b = read_vector(cfg.rhs_path)
    y0 = read_vector(cfg.x0_path) if cfg.x0_path else None
    rep = solvers.quantum_jacobi_solve(
        A,
        b,
        y0=y0,
        delta=cfg.delta,
        method=cfg.method,
        a=cfg.a,
        t=_explicit_time(cfg),
        N=cfg.N,
        L=cfg.L,
        override_convergence=cfg.override_convergence,
        recovery=cfg.recovery,
        pstar=cfg.pstar,
    )
    out = _base_report(cfg, A)
    out.update(
        {
            "grid": _grid_section(rep.grid),
            "t_used": rep.t_f_used,
            "fidelity": rep.fidelity,
            "residual": rep.residual,
            "success_probability": rep.success_probability,
            "state": _pairs(rep.state),
            "y": _pairs(rep.y_classical),
            "cost": _cost_section(rep.cost),
        }
    )
    if cfg.show_overlaps:
        out["overlaps"] = [float(x) for x in rep.convergence.overlaps]
    return out


def run_eig(cfg: RunConfig) -> dict:
    C = read_matrix_market(cfg.matrix_path)
    x0 = read_vector(cfg.x0_path) if cfg.x0_path else None
    rep = solvers.quantum_power_method(
        C,
        x0=x0,
        epsilon=cfg.epsilon,
        t=_explicit_time(cfg),
        N=cfg.N,
        L=cfg.L,
        recovery=cfg.recovery,
        pstar=cfg.pstar,
    )
    lam = rep.eigenvalue_estimate
    out = _base_report(cfg, C)
    out.update(
        {
            "grid": _grid_section(rep.grid),
            "t_used": rep.t_max_used,
            "fidelity": rep.fidelity,
            "success_probability": rep.success_probability,
            "eigenvalue_estimate": [lam.real, lam.imag],
            "eigenvalue_error_bound": rep.eigenvalue_error_bound,
            "state": _pairs(rep.state),
            "cost": _cost_section(rep.cost),
        }
    )
    if cfg.show_overlaps:
        out["overlaps"] = [float(x) for x in rep.convergence.overlaps]
    return out


def run_evolve(cfg: RunConfig) -> dict:
    C = read_matrix_market(cfg.matrix_path)
    if cfg.x0_path is None:
        raise InvalidInputError("evolve requires --x0")
    x0 = read_vector(cfg.x0_path)
    t = _explicit_time(cfg)
    if t is None:
        raise InvalidInputError("evolve requires an explicit --t")
    ds = core.split(C)
    L = cfg.L if cfg.L is not None else engine.default_domain_halfwidth(ds.C1h, t)
    grid = engine.make_grid(cfg.N, L)
    rec = engine.propagate(C, x0, t, grid, mode=cfg.recovery, pstar=cfg.pstar)
    exact = baselines.exact_propagator(C, x0, t)
    exact_unit = exact / np.linalg.norm(exact)
    out = _base_report(cfg, C)
    out.update(
        {
            "grid": _grid_section(grid),
            "t_used": t,
            "fidelity": float(np.abs(np.vdot(exact_unit, rec.state)) ** 2),
            "success_probability": rec.success_probability,
            "state": _pairs(rec.state),
            "x": _pairs(rec.x),
        }
    )
    return out


def run_diagnose(cfg: RunConfig) -> dict:
    A = read_matrix_market(cfg.matrix_path)
    s = solvers.build_splitting(A, np.zeros(A.shape[0]), method=cfg.method, a=cfg.a)
    aug = solvers.iteration_matrix(s)
    rG = float(np.max(np.abs(np.linalg.eigvals(s.G)))) if s.G.size else 0.0
    rep = core.spectrum(aug.C - np.eye(aug.dim + 1), steady_eigenvalue_hint=0j)
    if rep.gap > solvers.GAP_TIE_TOL:
        t_f = solvers.estimate_tf([cfg.alpha0_sq], rep.gap, cfg.delta)
    else:
        t_f = None
    ds = core.split(aug.C)
    L = cfg.L if cfg.L is not None else engine.default_domain_halfwidth(
        ds.C1h, t_f if t_f is not None else 0.0
    )
    out = _base_report(cfg, A)
    out.update(
        {
            "diag_dominant": core.is_diagonally_dominant(A),
            "iteration_spectral_radius": rG,
            "gap": rep.gap,
            "eigenvalues": _pairs(rep.eigenvalues),
            "sparsity": rep.sparsity,
            "max_norm": rep.max_norm,
            "recommended_grid": {"N": cfg.N, "L": L},
            "t_f_predicted": t_f,
            "delta": cfg.delta,
            "alpha0_sq_assumed": cfg.alpha0_sq,
        }
    )
    if t_f is not None:
        out["cost"] = _cost_section(
            solvers.quantum_cost_estimate(
                aug.C, None, t_f, epsilon=1.0 / cfg.N,
                overlap=float(np.sqrt(cfg.alpha0_sq)),
            )
        )
    return out


_RUNNERS = {
    "solve": run_solve,
    "eig": run_eig,
    "evolve": run_evolve,
    "diagnose": run_diagnose,
}


def execute(cfg: RunConfig) -> int:
    """Run one command, writing the report (or a machine-readable error
    document) to the configured output. Returns the process exit status."""
    started = time.perf_counter()
    try:
        report = _RUNNERS[cfg.command](cfg)
        status = 0
    except SchrosimError as exc:
        report = {
            "command": cfg.command,
            "version": __version__,
            "error": {"code": exc.code, "message": str(exc)},
        }
        status = exc.exit_status
    if cfg.timing and "error" not in report:
        report["wall_time_seconds"] = round(time.perf_counter() - started, 3)
    text = json.dumps(report, sort_keys=True, ensure_ascii=False) + "\n"
    if cfg.output_path and cfg.output_path != "-":
        with open(cfg.output_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return status


def _common_options(f):
    opts = [
        click.option("--matrix", "matrix_path", required=True, type=click.Path()),
        click.option("--n", "N", default=512, show_default=True),
        click.option("--l", "L", default=None, type=float, help="p-domain half-width (auto if omitted)"),
        click.option("--output", "output_path", default=None),
        click.option("--seed", default=None, type=int),
        click.option("--timing", is_flag=True, help="include wall time (breaks byte determinism)"),
    ]
    for opt in reversed(opts):
        f = opt(f)
    return f


def _recovery_options(f):
    opts = [
        click.option(
            "--recovery",
            type=click.Choice(["at-pstar", "sum-positive"]),
            default="sum-positive",
            show_default=True,
        ),
        click.option("--pstar", default=engine.DEFAULT_PSTAR, show_default=True),
    ]
    for opt in reversed(opts):
        f = opt(f)
    return f


def _norm_recovery(recovery: str) -> str:
    return recovery.replace("-", "_")


@click.group()
@click.version_option(__version__)
def main():
    """Spectral warped-phase simulator for iterative linear algebra."""


@main.command()
@_common_options
@_recovery_options
@click.option("--rhs", "rhs_path", required=True, type=click.Path())
@click.option("--x0", "x0_path", default=None, type=click.Path())
@click.option("--method", type=click.Choice(["jacobi", "richardson", "damped-jacobi"]), default="jacobi", show_default=True)
@click.option("--a", default=None, type=float, help="relaxation parameter")
@click.option("--t", default="auto", help="evolution time or 'auto'")
@click.option("--delta", default=1e-3, show_default=True)
@click.option("--override-convergence", is_flag=True)
@click.option("--show-overlaps", is_flag=True)
def solve(**kw):
    """Prepare the steady state encoding the solution of Ay = b."""
    kw["method"] = kw["method"].replace("-", "_")
    kw["recovery"] = _norm_recovery(kw["recovery"])
    sys.exit(execute(RunConfig(command="solve", **kw)))


@main.command()
@_common_options
@_recovery_options
@click.option("--x0", "x0_path", default=None, type=click.Path())
@click.option("--t", default="auto", help="evolution time or 'auto'")
@click.option("--epsilon", default=0.1, show_default=True)
@click.option("--show-overlaps", is_flag=True)
def eig(**kw):
    """Estimate the dominant eigenpair of C."""
    kw["recovery"] = _norm_recovery(kw["recovery"])
    sys.exit(execute(RunConfig(command="eig", **kw)))


@main.command()
@_common_options
@_recovery_options
@click.option("--x0", "x0_path", required=True, type=click.Path())
@click.option("--t", required=True, type=float)
def evolve(**kw):
    """Evolve x0 under the drift of C for an explicit time."""
    kw["recovery"] = _norm_recovery(kw["recovery"])
    sys.exit(execute(RunConfig(command="evolve", **kw)))


@main.command()
@_common_options
@click.option("--method", type=click.Choice(["jacobi", "richardson", "damped-jacobi"]), default="jacobi", show_default=True)
@click.option("--a", default=None, type=float)
@click.option("--delta", default=1e-3, show_default=True)
@click.option("--alpha0-sq", default=0.5, show_default=True, help="assumed steady-mode overlap for the stopping-time prediction")
def diagnose(**kw):
    """Spectral and convergence diagnostics; no evolution run."""
    kw["method"] = kw["method"].replace("-", "_")
    sys.exit(execute(RunConfig(command="diagnose", **kw)))


if __name__ == "__main__":
    main()
