"""Command line interface for mixop-brezis-oswald.

Every command reads one TOML problem file and writes its results into an
output directory (``output.directory`` from the file unless ``--out`` is
given).  Exit codes: 0 success, 1 configuration error, 2 non-convergence,
3 inconsistency between the existence predicate and the observed solutions.

Usage examples::

    # solve the problem and write solution.csv + solve_report.json
    mixop-bo solve --config configs/power.toml

    # first eigenvalue of L - a0 for the configured nonlinearity
    mixop-bo eigen --config configs/logistic_super.toml --weight a0

    # every consistency check, with a summary table
    mixop-bo verify --config configs/logistic_sub.toml --out out/sub

    # one summary row per value of lambda_lin
    mixop-bo sweep --config configs/logistic_super.toml \\
        --param lambda_lin --values 20,25,30,35,40
"""
from __future__ import annotations

from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, NoReturn, Optional

import structlog
import typer
from rich.console import Console
from rich.table import Table

from .config import ProblemSpec, load_spec
from .eigen import EigenReport, asymptotic_weights, weighted_eigen
from .errors import ConfigError, ConvergenceError, MixopError
from .export import write_profile, write_report, write_summary
from .minimize import SolveReport, energy_identity_gap, minimize
from .nonlinearity import asymptotics
from .utils import configure_logging
from .verify import SUMMARY_COLUMNS, VerifyReport, parameter_sweep, run_verify

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NOT_CONVERGED = 2
EXIT_INCONSISTENT = 3

app = typer.Typer(add_completion=False, help="Mixed local/nonlocal sublinear problems on (0, 1)")
logger = structlog.get_logger(__name__)


class WeightChoice(str, Enum):
    a = "a"
    a0 = "a0"
    ainf = "ainf"


CONFIG_OPTION = typer.Option(..., "--config", "-c", help="TOML problem file")
OUT_OPTION = typer.Option(None, "--out", "-o", help="Output directory (default: output.directory)")
VERBOSE_OPTION = typer.Option(False, "--verbose", "-v", help="Log per-iteration details")
JSON_LOGS_OPTION = typer.Option(False, "--json-logs", help="Emit logs as JSON lines")


def _fail(exc: MixopError, code: int) -> NoReturn:
    typer.echo(f"error [{exc.code}]: {exc}", err=True)
    raise typer.Exit(code=code)


def _setup(
    config: Path, out: Optional[Path], verbose: bool, json_logs: bool
) -> tuple[ProblemSpec, Path]:
    configure_logging(verbose=verbose, json_logs=json_logs)
    try:
        spec = load_spec(config)
    except ConfigError as exc:
        _fail(exc, EXIT_CONFIG)
    out_dir = out if out is not None else Path(spec.output.directory)
    out_dir.mkdir(parents=True, exist_ok=True)
    return spec, out_dir


def _wants(spec: ProblemSpec, fmt: str) -> bool:
    return fmt in spec.output.formats


@app.command()
def solve(
    config: Path = CONFIG_OPTION,
    out: Optional[Path] = OUT_OPTION,
    verbose: bool = VERBOSE_OPTION,
    json_logs: bool = JSON_LOGS_OPTION,
) -> None:
    """Minimize the energy from the default start and write the solution.

    Writes ``solution.csv`` and ``solve_report.json``; a run that stops
    without converging still writes its best iterate and exits with code 2.
    """
    spec, out_dir = _setup(config, out, verbose, json_logs)
    try:
        ctx = spec.build_context()
        m = spec.build_model()
    except ValueError as exc:
        _fail(ConfigError(str(exc)), EXIT_CONFIG)
    code = EXIT_OK
    try:
        report: SolveReport = minimize(ctx, m, None, spec.solver_options())
    except ConvergenceError as exc:
        if exc.report is None:
            _fail(exc, EXIT_NOT_CONVERGED)
        report = exc.report
        code = EXIT_NOT_CONVERGED
        typer.echo(f"error [{exc.code}]: {exc}", err=True)

    document: Dict[str, Any] = {
        "spec": spec.resolved(),
        "asymptotics": asymptotics(m).to_document(),
        "solve": report.to_document(),
        "energy_identity_gap": energy_identity_gap(ctx, m, report.u_star),
    }
    if _wants(spec, "csv"):
        write_profile(report.u_star, out_dir / "solution.csv")
    if _wants(spec, "json"):
        write_report(document, out_dir / "solve_report.json")
    typer.echo(
        f"{report.status}: energy={report.energy:.6g} residual={report.residual_inf:.3e} "
        f"linf={report.linf:.6g} -> {out_dir}"
    )
    raise typer.Exit(code=code)


@app.command()
def eigen(
    config: Path = CONFIG_OPTION,
    weight: WeightChoice = typer.Option(
        WeightChoice.a,
        "--weight",
        "-w",
        help="a: eigen.weight from the file; a0 / ainf: minus the asymptotic limits",
    ),
    out: Optional[Path] = OUT_OPTION,
    verbose: bool = VERBOSE_OPTION,
    json_logs: bool = JSON_LOGS_OPTION,
) -> None:
    """First eigenvalue of ``L + a`` with its eigenfunction.

    Infinite results are written as ``"+inf"``/``"-inf"`` and carry no
    eigenfunction file.
    """
    spec, out_dir = _setup(config, out, verbose, json_logs)
    ctx = spec.build_context()
    if weight is WeightChoice.a:
        a_ext = spec.eigen_weight()
    else:
        minus_a0, minus_ainf = asymptotic_weights(spec.build_model())
        a_ext = minus_a0 if weight is WeightChoice.a0 else minus_ainf
    code = EXIT_OK
    try:
        report: EigenReport = weighted_eigen(ctx, a_ext, spec.eigen_options())
    except ValueError as exc:
        _fail(ConfigError(str(exc)), EXIT_CONFIG)
    except ConvergenceError as exc:
        if exc.report is None:
            _fail(exc, EXIT_NOT_CONVERGED)
        report = exc.report
        code = EXIT_NOT_CONVERGED
        typer.echo(f"error [{exc.code}]: {exc}", err=True)

    document = {"spec": spec.resolved(), "weight": weight.value, "eigen": report.to_document()}
    if _wants(spec, "json"):
        write_report(document, out_dir / "eigen_report.json")
    if report.e1 is not None and _wants(spec, "csv"):
        write_profile(report.e1, out_dir / "eigenfunction.csv")
    typer.echo(f"lambda1 = {document['eigen']['lambda1']} ({report.method}) -> {out_dir}")
    raise typer.Exit(code=code)


def _print_summary(report: VerifyReport) -> None:
    console = Console(stderr=True)
    table = Table(title=f"verify: {report.status}")
    table.add_column("check")
    table.add_column("status")
    colours = {"pass": "green", "fail": "red", "skipped": "yellow"}
    for name, status in report.checks.items():
        table.add_row(name, f"[{colours.get(status, 'white')}]{status}[/]")
    table.add_row("consistent", "[green]yes[/]" if report.consistent else "[red]no[/]")
    console.print(table)


@app.command()
def verify(
    config: Path = CONFIG_OPTION,
    out: Optional[Path] = OUT_OPTION,
    verbose: bool = VERBOSE_OPTION,
    json_logs: bool = JSON_LOGS_OPTION,
) -> None:
    """Run every check and write ``verify_report.json`` and ``summary.csv``."""
    spec, out_dir = _setup(config, out, verbose, json_logs)
    report = run_verify(spec)
    if _wants(spec, "json"):
        write_report(report.to_document(), out_dir / "verify_report.json")
    if _wants(spec, "csv"):
        write_summary([report.summary_row()], SUMMARY_COLUMNS, out_dir / "summary.csv")
        if report.solution is not None:
            write_profile(report.solution.u_star, out_dir / "solution.csv")
    _print_summary(report)
    if report.status == "not_converged":
        raise typer.Exit(code=EXIT_NOT_CONVERGED)
    if report.status == "inconsistent":
        raise typer.Exit(code=EXIT_INCONSISTENT)
    raise typer.Exit(code=EXIT_OK)


def _parse_values(text: str) -> List[float]:
    parts = [part.strip() for part in text.split(",") if part.strip()]
    try:
        return [float(part) for part in parts]
    except ValueError as exc:
        raise ConfigError(f"--values: {exc}") from exc


@app.command()
def sweep(
    config: Path = CONFIG_OPTION,
    param: str = typer.Option(..., "--param", "-p", help="lambda_lin, s, p or n_cells"),
    values: str = typer.Option(..., "--values", help="Comma-separated parameter values"),
    workers: int = typer.Option(1, "--workers", min=1, help="Parallel processes"),
    out: Optional[Path] = OUT_OPTION,
    verbose: bool = VERBOSE_OPTION,
    json_logs: bool = JSON_LOGS_OPTION,
) -> None:
    """Verify one problem per value and write ``sweep.csv`` in input order."""
    spec, out_dir = _setup(config, out, verbose, json_logs)
    try:
        rows = parameter_sweep(spec, param, _parse_values(values), workers=workers)
    except ConfigError as exc:
        _fail(exc, EXIT_CONFIG)
    write_summary(rows, SUMMARY_COLUMNS, out_dir / "sweep.csv")
    inconsistent = sum(1 for row in rows if not row["consistent"])
    logger.info("sweep_done", rows=len(rows), inconsistent=inconsistent)
    typer.echo(f"Wrote {len(rows)} rows to {out_dir / 'sweep.csv'} ({inconsistent} inconsistent)")


if __name__ == "__main__":  # pragma: no cover
    app()
