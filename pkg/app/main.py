import click

from app import __version__
from app.cli.chain_commands import chain
from app.cli.ergodic_commands import ergodic
from app.cli.lemma_commands import tn_bounds
from app.cli.mu_commands import mu, obstruction


@click.group(name="mulab")
@click.version_option(__version__, prog_name="mulab")
def cli():
    """Finite-dimensional laboratory for the noncommutative martingale counterexample."""


cli.add_command(tn_bounds)
cli.add_command(mu)
cli.add_command(obstruction)
cli.add_command(chain)
cli.add_command(ergodic)


if __name__ == "__main__":
    cli()
