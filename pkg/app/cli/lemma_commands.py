import click

from app.cli.options import float_list, output_options, run_command
from app.model.experiment_config import Command


@click.command("tn-bounds")
@click.option("--n-max", type=click.IntRange(min=1), default=None, help="Largest n of T_n (default 64).")
@click.option("--p-list", callback=float_list, default=None, help="Exponents in (0, 1), e.g. 0.1,0.25.")
@output_options
@click.pass_context
def tn_bounds(ctx, **params):
    """(n/2)^{1/p} ≤ ‖T_n‖_p ≤ (2n/(1−2^{p−1}))^{1/p} and the v_k recursion."""
    run_command(ctx, Command.TN_BOUNDS, **params)
