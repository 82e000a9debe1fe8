"""Command-line entry point: ``dish analyze|simulate|compare|correlate``."""

import json
import sys

import click

from dish import analytic
from dish.experiments import (
    ALL_MODES, ANALYTIC, ConfigError, ExperimentSpec, analytic_params, compare, correlate,
    format_report, load_config, rows_to_csv, tolerance_breaches,
)
from dish.sim import aggregate, run_once
from dish.sim.config import DISH_MODES, MULTI_HOP, SINGLE_HOP, SimConfig
from dish.sim.topology import ConnectivityFailure


def _spec(config, topology, lam, n, L, seed, modes):
    if config is not None:
        try:
            spec = load_config(config)
        except ConfigError as exc:
            raise click.BadParameter(str(exc), param_hint="--config") from None
    else:
        spec = ExperimentSpec(SimConfig())
    try:
        spec = spec.with_overrides(topology=topology, lam=None if lam is None else float(lam),
                                   n=n, L=L, seed=seed, mode=list(modes) if modes else None)
    except ValueError as exc:
        raise click.BadParameter(str(exc)) from None
    return spec


def common(f):
    opts = [
        click.option("--config", type=click.Path(exists=True, dir_okay=False), help="TOML experiment file."),
        click.option("--topology", type=click.Choice([SINGLE_HOP, MULTI_HOP])),
        click.option("--lambda", "lam", type=float, help="Packet rate per node (1/s)."),
        click.option("--n", type=float, help="Node count (single-hop) or density per range^2."),
        click.option("--L", "L", type=int, help="Payload bytes."),
        click.option("--seed", type=int),
        click.option("--mode", "modes", multiple=True, type=click.Choice(ALL_MODES),
                     help="Repeat to select several."),
    ]
    for o in reversed(opts):
        f = o(f)
    return f


def _n(n, topology):
    if n is not None and topology == SINGLE_HOP and n == int(n):
        return int(n)
    return n


def _emit(text, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        click.echo(text)


@click.group()
def main():
    """Availability of cooperation in multi-channel MAC networks."""


@main.command()
@common
@click.option("--json", "as_json", is_flag=True, help="Machine-readable output.")
def analyze(config, topology, lam, n, L, seed, modes, as_json):
    """Solve the steady state and report every intermediate quantity."""
    spec = _spec(config, topology, lam, _n(n, topology), L, seed, ())
    cfg = spec.base
    try:
        params = analytic_params(cfg)
        state, coop = analytic.analyze(params)
    except analytic.NoStableSolution as exc:
        probe = analytic.NetworkParams(n=cfg.n, lam=0.0, T_d=cfg.T_d, b=cfg.b, topology=cfg.topology)
        bound = analytic.max_stable_lambda(probe)
        click.echo(f"no stable solution at lambda={cfg.lam:g}: {exc}", err=True)
        click.echo(f"stability boundary: lambda_max={bound:.6g} (lambda*T_d={bound * cfg.T_d:.6g})",
                   err=True)
        sys.exit(2)
    report = {"topology": cfg.topology, "n": cfg.n, "lambda": cfg.lam, "L": cfg.L,
              "T_d": cfg.T_d, "b": cfg.b}
    report.update(state.as_dict())
    report.update(p_ctrl_star=coop.p_ctrl_star, p_co_xy_star=coop.p_co_xy_star, p_co=coop.p_co)
    report.update({k: v for k, v in coop.aux.items() if k not in report})
    if as_json:
        click.echo(json.dumps(report, indent=2, sort_keys=True))
    else:
        for k, v in report.items():
            click.echo(f"{k} = {v:.9g}" if isinstance(v, float) else f"{k} = {v}")


@main.command()
@common
@click.option("--out", type=click.Path(dir_okay=False), help="Write aggregate JSON here.")
@click.option("--trace", type=click.Path(dir_okay=False), help="Event trace of replication 0.")
def simulate(config, topology, lam, n, L, seed, modes, out, trace):
    """Run all replications of one configuration and write pooled metrics."""
    chosen = [m for m in modes if m != ANALYTIC]
    if len(chosen) > 1:
        raise click.BadParameter("simulate takes a single DISH mode", param_hint="--mode")
    spec = _spec(config, topology, lam, _n(n, topology), L, seed, ())
    cfg = spec.base if not chosen else spec.base.replace(dish_mode=chosen[0])
    records, failures = [], []
    for r in range(cfg.replications):
        try:
            rec, sim = run_once(cfg, r, trace=bool(trace) and r == 0)
        except ConnectivityFailure as exc:
            failures.append(f"replication {r}: {exc}")
            continue
        if trace and r == 0:
            with open(trace, "w") as fh:
                fh.write("\n".join(sim.trace) + "\n")
        records.append(rec)
    for f in failures:
        click.echo(f, err=True)
    if not records:
        sys.exit(3)
    doc = {"config": cfg.as_dict(), "metrics": aggregate(records).as_dict()}
    _emit(json.dumps(doc, indent=2, sort_keys=True), out or spec.output)


@main.command(name="compare")
@common
@click.option("--out", type=click.Path(dir_okay=False), help="CSV destination.")
@click.option("--assert", "check", is_flag=True, help="Exit 1 when a deviation exceeds tolerance.")
def compare_cmd(config, topology, lam, n, L, seed, modes, out, check):
    """Analysis against simulation over the configured sweep (CSV)."""
    spec = _spec(config, topology, lam, _n(n, topology), L, seed, modes)
    if not any(m in DISH_MODES for m in spec.modes):
        raise click.BadParameter("compare needs at least one simulated mode", param_hint="--mode")
    rows = compare(spec)
    _emit(rows_to_csv(rows).rstrip("\n"), out or spec.output)
    if check:
        bad = tolerance_breaches(rows, spec.tolerances)
        for r in bad:
            tol = spec.tolerances[r["_config"].topology]
            click.echo(f"tolerance breach: {r['sweep_param']}={r['sweep_value']} "
                       f"deviation {r['deviation']:.4f} > {tol}", err=True)
        if bad:
            sys.exit(1)


@main.command(name="correlate")
@common
@click.option("--out", type=click.Path(dir_okay=False))
def correlate_cmd(config, topology, lam, n, L, seed, modes, out):
    """Fit the η ratios of a cooperative mode against p_co over the sweep."""
    spec = _spec(config, topology, lam, _n(n, topology), L, seed, modes)
    if len(spec.values) < 4:
        raise click.UsageError(f"correlation needs at least 4 sweep points, got {len(spec.values)}")
    if "model-based" not in spec.modes or not ({"ideal", "real"} & set(spec.modes)):
        raise click.UsageError("correlation needs model-based and ideal or real modes")
    rows = compare(spec)
    try:
        report = correlate(rows)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from None
    _emit(format_report(report), out)


if __name__ == "__main__":
    main()
