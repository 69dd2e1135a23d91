import click

from app.cli.options import float_list, int_list, output_options, run_command
from app.model.experiment_config import Command


@click.command("chain")
@click.option("--n-list", callback=int_list, default=None, help="Factor sizes N.")
@click.option("--p-list", callback=float_list, default=None, help="Chain exponent in (0, 1/2) (first value is used).")
@click.option("--t", type=float, default=None, help="Corank budget t in (0, 1).")
@click.option("--trials", type=click.IntRange(min=1), default=None, help="Random projections per N.")
@output_options
@click.pass_context
def chain(ctx, **params):
    """Inequality chain A = B + C on random projections of corank ≤ t."""
    run_command(ctx, Command.CHAIN, **params)
