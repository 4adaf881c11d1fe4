"""
Command-line front end.

Every command that writes a table emits CSV whose first line is a '#'-prefixed
JSON manifest. Exit codes: 1 configuration error, 2 data error (unreadable
input file), 3 solver failure, 4 failed self-check.
"""
import hashlib
import logging
from pathlib import Path
from typing import Callable

import polars as pl
import typer
from pydantic import TypeAdapter, ValidationError

from app.core.config import settings
from app.core.errors import ConfigurationError, DataError, SolverError
from app.core.logging import configure_logging
from app.models.reports import CertificateRow, CoverageReport, CurveRow, PubReport, RunManifest
from app.numerics.pub_bound import pub as product_upper_bound
from app.schemas.certificates import CertifyMethod
from app.schemas.coverage import CoverageExperiment
from app.schemas.layers import LayerSpec
from app.services.certification_service import CertificationService
from app.services.coverage import run_coverage
from app.services.curves import radius_curves
from app.services.selfcheck import run_selfcheck
from simulators.read_counts import enforce_round_sizes, read_counts_file

logger = logging.getLogger(__name__)

app = typer.Typer(help="Randomized-smoothing certification toolkit", no_args_is_help=True)

EXIT_CONFIGURATION = 1
EXIT_DATA = 2
EXIT_SOLVER = 3
EXIT_SELFCHECK = 4

CERTIFICATE_SCHEMA = {
    "input_id": pl.Utf8,
    "method": pl.Utf8,
    "model_tag": pl.Utf8,
    "sigma": pl.Float64,
    "alpha": pl.Float64,
    "n": pl.Int64,
    "c_star": pl.Int64,
    "i1": pl.Int64,
    "lower_p1": pl.Float64,
    "max_upper": pl.Float64,
    "radius": pl.Float64,
    "abstain": pl.Boolean,
    "error": pl.Utf8,
}

CURVE_SCHEMA = {
    "p1": pl.Float64,
    "p2": pl.Float64,
    "r_mono": pl.Float64,
    "r_mult": pl.Float64,
    "r_mono_lip": pl.Float64,
    "r_mult_lip": pl.Float64,
    "fallback": pl.Boolean,
}


@app.callback()
def main(log_level: str = typer.Option(settings.LOG_LEVEL, "--log-level", help="Logging level")):
    configure_logging(level=log_level)


def _run(action: Callable[[], None]) -> None:
    """Map the error hierarchy onto exit codes"""
    try:
        action()
    except SolverError as e:
        logger.error(f"Solver failure: {e}")
        typer.echo(f"solver error: {e}", err=True)
        raise typer.Exit(code=EXIT_SOLVER)
    except DataError as e:
        typer.echo(f"data error: {e}", err=True)
        raise typer.Exit(code=EXIT_DATA)
    except ValueError as e:
        typer.echo(f"configuration error: {e}", err=True)
        raise typer.Exit(code=EXIT_CONFIGURATION)


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _echo(values: list, default):
    """One value when the run used a single one, the distinct values in order otherwise"""
    distinct = list(dict.fromkeys(values))
    if not distinct:
        return default
    return distinct[0] if len(distinct) == 1 else distinct


def _emit(frame: pl.DataFrame, manifest: RunManifest, out: Path | None) -> None:
    text = f"# {manifest.model_dump_json()}\n{frame.write_csv()}"
    if out is None:
        typer.echo(text, nl=False)
    else:
        out.write_text(text, encoding="utf-8")
        logger.info(f"Wrote {frame.height} rows to {out}")


def _read_json(path: Path, adapter: TypeAdapter):
    """Malformed JSON is a data error; well-formed but invalid content is a configuration error"""
    if not path.is_file():
        raise DataError(f"file not found: {path}")
    try:
        return adapter.validate_json(path.read_bytes())
    except ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(part) for part in first.get("loc", ()))
        message = f"{path.name}: {location + ': ' if location else ''}{first['msg']}"
        if first["type"] == "json_invalid":
            raise DataError(message) from e
        raise ConfigurationError(message) from e


def certificate_frame(rows: list[CertificateRow]) -> pl.DataFrame:
    frame = pl.DataFrame([row.model_dump() for row in rows], schema=CERTIFICATE_SCHEMA)
    radius = (
        pl.when(pl.col("abstain") & pl.col("error").is_null())
        .then(pl.lit("abstain"))
        .otherwise(pl.col("radius").cast(pl.Utf8))
        .alias("radius")
    )
    return frame.with_columns(radius).drop("abstain")


@app.command()
def certify(
    counts_file: Path = typer.Argument(..., help="Line-oriented JSON counts file"),
    method: str = typer.Option("cpm", "--method", help="pearson_clopper, bonferroni or cpm"),
    alpha: float = typer.Option(settings.ALPHA, "--alpha"),
    sigma: float = typer.Option(settings.SIGMA, "--sigma", help="Used for records without a sigma"),
    n0: int | None = typer.Option(None, "--n0", help="Expected selection-round size; other sizes are rejected"),
    n: int | None = typer.Option(None, "--n", help="Expected estimation-round size; other sizes are rejected"),
    seed: int = typer.Option(settings.SEED, "--seed", help="Seed the counts were sampled with, echoed in the manifest"),
    out: Path | None = typer.Option(None, "--out"),
):
    """
    Certify every input in a counts file.

    Invalid records are rejected one by one and reported as error rows; only
    a file that cannot be read fails the command.
    """
    def action():
        if method not in ("pearson_clopper", "bonferroni", "cpm"):
            raise ConfigurationError(f"unknown method {method!r}")
        counts = enforce_round_sizes(read_counts_file(counts_file), n0=n0, n=n)
        selected: CertifyMethod = method  # type: ignore[assignment]
        rows = CertificationService().certify_records(counts.records, selected, alpha=alpha, sigma=sigma,
                                                      rejected=counts.rejected)
        manifest = RunManifest(
            command="certify",
            version=settings.VERSION,
            alpha=alpha,
            sigma=sigma,
            n0=n0 if n0 is not None else _echo(counts.round_sizes("selection"), 0),
            n=n if n is not None else _echo(counts.round_sizes("estimation"), 0),
            seed=seed,
            method=method,
            inputs={counts_file.name: _digest(counts_file)},
        )
        _emit(certificate_frame(rows), manifest, out)

    _run(action)


@app.command()
def curves(
    lipschitz: float = typer.Option(4.0, "--L", help="Lipschitz constant of the base classifier"),
    sigma: float = typer.Option(0.12, "--sigma"),
    p2: float = typer.Option(0.1, "--p2"),
    points: int = typer.Option(100, "--points"),
    p1_min: float = typer.Option(0.11, "--p1-min"),
    p1_max: float = typer.Option(0.999, "--p1-max"),
    no_fallback: bool = typer.Option(False, "--no-fallback", help="Fail instead of using baseline radii"),
    out: Path | None = typer.Option(None, "--out"),
):
    """Radius-versus-p1 table of the four radii at exact probabilities"""
    def action():
        rows: list[CurveRow] = radius_curves(L=lipschitz, sigma=sigma, p2=p2, points=points, p1_min=p1_min,
                                             p1_max=p1_max, fallback=False if no_fallback else None)
        frame = pl.DataFrame([row.model_dump() for row in rows], schema=CURVE_SCHEMA)
        # exact probabilities: no risk is spent and nothing is sampled
        manifest = RunManifest(command="curves", version=settings.VERSION, alpha=0.0, sigma=sigma, n0=0, n=0,
                               seed=settings.SEED, method="exact",
                               inputs={"L": repr(lipschitz), "p2": repr(p2)})
        _emit(frame, manifest, out)

    _run(action)


@app.command()
def coverage(
    experiment_file: Path = typer.Argument(..., help="JSON experiment or list of experiments"),
    seed: int | None = typer.Option(None, "--seed", help="Overrides the experiments' seeds"),
    out: Path | None = typer.Option(None, "--out"),
):
    """Monte Carlo coverage of certification procedures"""
    def action():
        parsed = _read_json(experiment_file, TypeAdapter(list[CoverageExperiment] | CoverageExperiment))
        experiments = parsed if isinstance(parsed, list) else [parsed]
        if seed is not None:
            experiments = [exp.model_copy(update={"seed": seed}) for exp in experiments]

        reports: list[CoverageReport] = [run_coverage(exp) for exp in experiments]
        frame = pl.DataFrame({
            "procedure": [r.procedure for r in reports],
            "criterion": [r.criterion for r in reports],
            "true_p": [";".join(f"{q:.6g}" for q in r.true_p) for r in reports],
            "n": [r.n for r in reports],
            "alpha": [r.alpha for r in reports],
            "replications": [r.replications for r in reports],
            "failure_rate": [r.failure_rate for r in reports],
            "stderr": [r.mc_stderr for r in reports],
            "verdict": [r.verdict for r in reports],
            "searched": [r.searched for r in reports],
        })
        manifest = RunManifest(
            command="coverage",
            version=settings.VERSION,
            alpha=_echo([r.alpha for r in reports], 0.0),
            sigma=_echo([exp.sigma for exp in experiments], 0.0),
            n0=_echo([r.n0 or 0 for r in reports], 0),
            n=_echo([r.n for r in reports], 0),
            seed=_echo([exp.seed for exp in experiments], settings.SEED),
            method=_echo([r.procedure for r in reports], "none"),
            inputs={experiment_file.name: _digest(experiment_file)},
        )
        _emit(frame, manifest, out)

    _run(action)


@app.command("pub")
def pub_command(
    layers_file: Path = typer.Argument(..., help="JSON list of layer specs"),
    seed: int = typer.Option(settings.SEED, "--seed", help="Power-iteration start vector seed"),
    out: Path | None = typer.Option(None, "--out"),
):
    """Product upper bound of a layer chain"""
    def action():
        layers = _read_json(layers_file, TypeAdapter(list[LayerSpec]))
        report = PubReport.from_result(product_upper_bound(layers, seed=seed))
        if report.pub is None:
            logger.warning(f"PUB overflows a float; log_pub={report.log_pub}")
        pub_text = "overflow, see log" if report.pub is None else f"{report.pub:.6g}"
        typer.echo(f"log_pub={report.log_pub:.12g} PUB={pub_text} layers={report.layers}", err=out is None)

        frame = pl.DataFrame({
            "index": [layer.index for layer in report.per_layer],
            "kind": [layer.kind for layer in report.per_layer],
            "lipschitz": [layer.lipschitz for layer in report.per_layer],
            "converged": [layer.converged for layer in report.per_layer],
        })
        # no noise, risk or sampling enters a PUB
        manifest = RunManifest(command="pub", version=settings.VERSION, alpha=0.0, sigma=0.0, n0=0, n=0,
                               seed=seed, method="power_iteration",
                               inputs={layers_file.name: _digest(layers_file)})
        _emit(frame, manifest, out)

    _run(action)


@app.command()
def selfcheck():
    """Compare the numerics with independent library oracles; exits with code 4 when any check fails"""
    results = run_selfcheck()
    for result in results:
        typer.echo(f"{'ok  ' if result.passed else 'FAIL'} {result.name}: {result.detail}")
    if not all(result.passed for result in results):
        raise typer.Exit(code=EXIT_SELFCHECK)


if __name__ == "__main__":
    app()
