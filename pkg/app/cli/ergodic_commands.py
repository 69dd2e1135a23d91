import click

from app.cli.options import float_list, int_list, output_options, run_command
from app.model.experiment_config import Command


@click.command("ergodic")
@click.option("--n-list", callback=int_list, default=None, help="Matrix sizes N.")
@click.option("--k-list", callback=int_list, default=None, help="Phase bases K ≥ 2 to sweep.")
@click.option("--p-list", callback=float_list, default=None, help="Exponent p ≥ 1 (first value is used).")
@click.option("--trials", type=click.IntRange(min=1), default=None, help="Random x per K.")
@click.option("--tol", type=float, default=None, help="Per-level tolerance of the Cesàro subsequence.")
@output_options
@click.pass_context
def ergodic(ctx, **params):
    """Smallest K for which diagonal-unitary averages approximate the filtration."""
    run_command(ctx, Command.ERGODIC, **params)
