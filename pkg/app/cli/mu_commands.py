import click

from app.cli.options import float_list, int_list, output_options, run_command
from app.model.experiment_config import Command


@click.command("mu")
@click.option("--n-list", callback=int_list, default=None, help="Factor sizes N, e.g. 8,16,32.")
@click.option("--t", type=float, default=None, help="Corank budget t in (0, 1).")
@click.option("--p-list", callback=float_list, default=None, help="Exponent certifying δ (first value is used).")
@click.option("--budget", type=click.IntRange(min=1), default=None, help="Objective evaluations per search.")
@click.option("--descents", type=click.IntRange(min=1), default=None)
@output_options
@click.pass_context
def mu(ctx, **params):
    """Certified, searched and diagonal values of μ_t^c((𝔼_n X_N)_n) across N."""
    run_command(ctx, Command.MU, **params)


@click.command("obstruction")
@click.option("--p-list", callback=float_list, default=None, help="Exponents in [1, 2).")
@click.option("--t", type=float, default=None, help="Corank budget, at most t′ of the chain exponent.")
@click.option("--n-max", type=click.IntRange(min=1), default=None)
@click.option("--chain-p", type=float, default=None, help="Chain exponent certifying δ (default 1/4).")
@output_options
@click.pass_context
def obstruction(ctx, **params):
    """Lower bounds δ (N!)^{1/p−1/2} N^{−2} ruling out almost uniform convergence."""
    run_command(ctx, Command.OBSTRUCTION, **params)
