#
# 8888888b.   .d8888b.  888b    888  .d8888b.  8888888 888b     d888 
# 888  "Y88b d88P  Y88b 8888b   888 d88P  Y88b   888   8888b   d8888 
# 888    888 888    888 88888b  888 Y88b.        888   88888b.d88888 
# 888    888 888        888Y88b 888  "Y888b.     888   888Y88888P888 
# 888    888 888        888 Y88b888     "Y88b.   888   888 Y888P 888 
# 888    888 888    888 888  Y88888       "888   888   888  Y8P  888 
# 888  .d88P Y88b  d88P 888   Y8888 Y88b  d88P   888   888   "   888 
# 8888888P"   "Y8888P"  888    Y888  "Y8888P"  8888888 888       888 
#
# Copyright (c) 2025, Abe Mishler
# Licensed under the Universal Permissive License v 1.0
# as shown at https://oss.oracle.com/licenses/upl/. 
# 

"""
Command-line interface for the DCNSIM simulator.
"""

import logging
import sys
from typing import Optional, Tuple

import click

from . import __version__
from .base import ConfigError, DcnError
from .checks import run_checks
from .config import Config
from .harness import compare as compare_traces
from .harness import run_experiment
from .registry import registry

# Configure Click to use -h as help shortcut
CONTEXT_SETTINGS = dict(help_option_names=['-h', '--help'])

EXIT_OK, EXIT_MISSED, EXIT_CONFIG, EXIT_ERROR = 0, 1, 2, 3


@click.group(context_settings=CONTEXT_SETTINGS)
@click.version_option(version=__version__, prog_name='DCNSIM')
@click.option('--verbose', '-v', count=True, help='More logging (repeat for debug)')
@click.option('--quiet', '-q', is_flag=True, help='Only log errors')
def cli(verbose: int, quiet: bool):
    """DCNSIM - Decentralized Cubic Newton simulator

    Runs decentralized cubic Newton methods over simulated networks and
    records per-iteration traces.
    """
    if quiet:
        level = logging.ERROR
    else:
        level = {0: logging.WARNING, 1: logging.INFO}.get(verbose, logging.DEBUG)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


@cli.command()
@click.option('--config', '-c', 'config_path', default=None, type=click.Path(),
              help='YAML config file')
@click.option('--seed', type=int, default=None, help='Random seed')
@click.option('--out', '-o', 'out_dir', default=None, help='Output directory')
@click.option('--algo', '-a', 'algorithm', default=None,
              help='Algorithm (dcn-convex, dcn-sc, adcn)')
@click.option('--eps', type=float, default=None, help='Target gap')
@click.option('--mode', type=click.Choice(['analytic', 'adaptive']), default=None,
              help='Round planning mode')
@click.option('--backend', '-b', default=None, help='Hessian backend (dense, glm, glm-topk:K)')
@click.option('--workers', '-w', type=int, default=None, help='Worker threads for node work')
def run(config_path: Optional[str], seed: Optional[int], out_dir: Optional[str],
        algorithm: Optional[str], eps: Optional[float], mode: Optional[str],
        backend: Optional[str], workers: Optional[int]):
    """Run one experiment and write trace.csv and params.json"""

    try:
        config = Config(config_path)
        options = config.to_run_options(seed=seed, out_dir=out_dir, algorithm=algorithm,
                                        eps=eps, mode=mode, backend=backend, workers=workers)
        click.echo(f"Running {options.algorithm} on {options.suite.family} "
                   f"(m={options.suite.m}, d={options.suite.d}), eps={options.eps:g}")
        result = run_experiment(options)
    except ConfigError as e:
        click.echo(f"❌ Configuration error: {e}", err=True)
        sys.exit(EXIT_CONFIG)
    except DcnError as e:
        click.echo(f"❌ Run failed: {e}", err=True)
        sys.exit(EXIT_ERROR)

    trace = result.trace
    click.echo(f"  • iterations: {len(trace) - 1}")
    click.echo(f"  • communication rounds: {trace.last['cum_rounds']}")
    click.echo(f"  • scalars sent: {trace.last['cum_scalars']}")
    for path in result.files:
        click.echo(f"  • wrote {path}")
    if result.exit_code == EXIT_OK:
        click.echo(f"\n✓ Final gap {trace.final_gap:.3e} <= {options.eps:g}")
    else:
        click.echo(f"\n⚠️  Final gap {trace.final_gap:.3e} misses {options.eps:g}")
    sys.exit(result.exit_code)


@cli.command()
@click.argument('traces', nargs=-1, type=click.Path(exists=True))
@click.option('--out', '-o', 'out_dir', default=None, help='Directory for the comparison CSVs')
@click.option('--eps', type=float, default=None, help='Target gap for iterations-to-eps')
def compare(traces: Tuple[str, ...], out_dir: Optional[str], eps: Optional[float]):
    """Compare run directories or trace files"""

    try:
        comparison = compare_traces(list(traces), eps)
    except DcnError as e:
        click.echo(f"❌ Could not read traces: {e}", err=True)
        sys.exit(EXIT_CONFIG)

    if comparison.summary.empty:
        click.echo("No traces given.")
        return
    click.echo(comparison.summary.to_string(index=False))
    if out_dir:
        for path in comparison.save(out_dir):
            click.echo(f"  • wrote {path}")


@cli.command()
@click.option('--seed', type=int, default=0, help='Random seed')
def check(seed: int):
    """Run the invariant checks"""

    click.echo("🔧 Running invariant checks...")
    results = run_checks(seed)
    for result in results:
        mark = "✓" if result.passed else "❌"
        click.echo(f"{mark} {result.name}: {result.detail}")
    failed = [r for r in results if not r.passed]
    if failed:
        click.echo(f"\n❌ {len(failed)} of {len(results)} checks failed")
        sys.exit(EXIT_MISSED)
    click.echo(f"\n✓ All {len(results)} checks passed")


@cli.command()
def algorithms():
    """List registered algorithms and Hessian backends"""

    click.echo("Algorithms:")
    for name in registry.list_algorithms():
        click.echo(f"  • {name}")
    click.echo("\nHessian backends:")
    for name in registry.list_backends():
        suffix = ":K" if name.endswith("topk") else ""
        click.echo(f"  • {name}{suffix}")


if __name__ == '__main__':
    cli()
