import functools
from typing import Any, Dict, List, Optional

import click
from rich.table import Table
from rich.text import Text

from app import __version__
from app.config.lab_config import JOBS_ENV
from app.model.errors import LabError
from app.model.experiment_config import Command
from app.service.experiments import ExperimentService
from app.util.config_loader import explicit_parameters, load_config_file, merge_config
from app.util.logger import configure_logging, stderr_console
from app.util.results import OutputFormat, compact_json, render_result, write_result

experiment_service = ExperimentService()


def _split(value: Optional[str], cast, param) -> Optional[List]:
    if value is None:
        return None
    try:
        return [cast(item) for item in value.replace(" ", "").split(",") if item]
    except ValueError as e:
        raise click.BadParameter(f"expected a comma-separated list, got {value!r}", param=param) from e


def int_list(ctx, param, value):
    return _split(value, int, param)


def float_list(ctx, param, value):
    return _split(value, float, param)


def output_options(fn):
    """Flags shared by every command: config file, output, workers, logging."""

    @click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None, help="YAML file of experiment parameters.")
    @click.option("--format", "fmt", type=click.Choice([f.value for f in OutputFormat]), default=OutputFormat.CSV.value, show_default=True)
    @click.option("--out", type=click.Path(dir_okay=False), default=None, help="Result file; stdout when omitted.")
    @click.option("--jobs", type=click.IntRange(min=1), envvar=JOBS_ENV, default=None, help=f"Worker count (default ${JOBS_ENV} or 1).")
    @click.option("--seed", type=click.IntRange(min=0), default=None)
    @click.option("--dim-cap", type=click.IntRange(min=1), default=None)
    @click.option("--verbose", is_flag=True, help="Log progress at INFO level.")
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        return fn(*args, **kwargs)

    return wrapper


def summary_table(command: str, summary: Dict[str, Any]) -> Table:
    table = Table(title=f"mulab {command}", show_header=True, header_style="bold cyan")
    table.add_column("field")
    table.add_column("value")
    for key, value in summary.items():
        text = Text(value if isinstance(value, str) else compact_json(value))
        if key == "passed":
            text = Text("pass", style="green") if value else Text("FAIL", style="bold red")
        table.add_row(key, text)
    return table


def run_command(ctx: click.Context, command: Command, **params):
    """
    Merges flags with the optional config file, runs the grid, writes the
    result document and exits non-zero when any assertion failed.
    """
    config_path = params.pop("config_path")
    fmt = params.pop("fmt")
    out = params.pop("out")
    jobs = params.pop("jobs")
    verbose = params.pop("verbose")
    configure_logging(verbose)

    try:
        file_values = load_config_file(config_path)
        config = merge_config(command, params, explicit_parameters(ctx, params.keys()), file_values)
        result = experiment_service.run(config, jobs)
    except LabError as e:
        raise click.ClickException(str(e)) from e

    text = render_result(result, config.echo(), __version__, OutputFormat(fmt))
    path = write_result(text, out)
    if path is None:
        click.echo(text, nl=False)
    stderr_console.print(summary_table(Command(command).value, result.summary))
    if path is not None:
        stderr_console.print(f"results written to {path}")
    if not result.passed:
        ctx.exit(1)
