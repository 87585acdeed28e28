"""Command-line interface for the bit-width search."""

from __future__ import annotations

import json
import sys

import click

from .lut import load_net, load_tables, save_assignment
from .search import SearchConfig, run_search
from .supernet import toy_network


@click.group()
def main():
    """Differentiable DSP-aware bit-width search."""


@main.command("toy-net")
@click.option("-o", "--out", required=True)
def cmd_toy_net(out):
    """Write the bundled desk-scale network document."""
    doc = {"version": 1, "layers": toy_network()}
    with open(out, "w") as fh:
        fh.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    click.echo(f"wrote toy network -> {out}", err=True)


@main.command("run")
@click.option("--net", "net_path", required=True,
              help="network JSON (toolkit schema)")
@click.option("--lut", "lut_paths", multiple=True, required=True,
              help="throughput table JSON (repeat per kernel shape)")
@click.option("--config", "config_path", default=None,
              help="flat KEY=VALUE training config")
@click.option("--eta", type=float, default=None, help="override eta")
@click.option("--seed", type=int, default=None, help="override seed")
@click.option("--epochs", type=int, default=None, help="override epochs")
@click.option("-o", "--out", required=True, help="assignment JSON")
def cmd_run(net_path, lut_paths, config_path, eta, seed, epochs, out):
    """Search bit-widths and emit the assignment."""
    try:
        layers = load_net(net_path)
        tables = load_tables(lut_paths)
    except (OSError, ValueError, KeyError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    config = SearchConfig.from_file(config_path) if config_path else SearchConfig()
    if seed is not None:
        config.seed = seed
    if epochs is not None:
        config.epochs = epochs
    result = run_search(layers, tables, config, eta=eta)
    if result.loss_acc != result.loss_acc:  # NaN
        click.echo("error: non-finite loss", err=True)
        sys.exit(1)
    save_assignment(out, result.assignment)
    click.echo(f"Op_dsp = {result.loss_comp} (~{float(result.loss_comp):.0f})  "
               f"val loss = {result.loss_acc:.3f}  "
               f"{result.seconds:.1f}s -> {out}", err=True)


if __name__ == "__main__":
    main()
