"""Command line entry point: ``relay-aoi <command>``.

Exit codes: 0 success, 1 usage or config error, 2 check failure, 3 oracle
budget refusal. Every command computes all of its outputs before writing any,
and each file is written through a temporary sibling and a rename.
"""

from __future__ import annotations

import dataclasses
import logging
import sys
from pathlib import Path

import click
import numpy as np

from relay_aoi import presets, streams
from relay_aoi.config import ConfigError, ExperimentConfig, parse_config, render_config
from relay_aoi.core import BudgetExceededError
from relay_aoi.policies import PolicySpec, QParams, solve_backward_induction, train_q_learning
from relay_aoi.policies.dp import dump_dp_table
from relay_aoi.policies.qlearn import dump_q_table, load_q_table
from relay_aoi.reports import (
    metadata_json,
    render_csv,
    summary_csv,
    trajectory_csv,
    values_csv,
    write_atomic,
)
from relay_aoi.sim import OutageTape, exact_expected_value, run_coupled, run_episode, run_monte_carlo
from relay_aoi.verify import VerifyOptions, run_verify

log = logging.getLogger("relay_aoi")

EXIT_OK, EXIT_USAGE, EXIT_CHECK, EXIT_BUDGET = 0, 1, 2, 3


class CheckFailure(Exception):
    pass


def _load(path: str) -> ExperimentConfig:
    if path == "-":
        text = sys.stdin.read()
    else:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text)


def _emit(out: Path, files: dict[str, str]) -> None:
    for name, text in files.items():
        write_atomic(out / name, text)
        log.info("wrote %s", out / name)


def _qparams(episodes: int | None, base: QParams = QParams()) -> QParams:
    return base if episodes is None else dataclasses.replace(base, episodes=episodes)


def build_policies(exp: ExperimentConfig, episodes: int | None = None, q_table: str | None = None) -> list[PolicySpec]:
    cfg = exp.network
    out = []
    for name in exp.policies:
        if name == "greedy":
            out.append(PolicySpec.greedy())
        elif name == "random":
            out.append(PolicySpec.random())
        elif name == "dp_optimal":
            out.append(PolicySpec.dp(solve_backward_induction(cfg)))
        elif q_table is not None:
            with open(q_table, encoding="utf-8") as fh:
                table = load_q_table(fh)
            if table.cfg != cfg:
                raise ConfigError(f"Q-table in {q_table} was trained for {table.cfg.describe()}, config is {cfg.describe()}")
            out.append(PolicySpec.learned(table, name=name))
        else:
            base = presets.DQN_SUBSTITUTE if name == "dqn" else QParams()
            out.append(PolicySpec.learned(train_q_learning(cfg, _qparams(episodes, base), seed=exp.seed), name=name))
    return out


def _metadata(exp: ExperimentConfig, command: str, **extra) -> str:
    meta = {
        "command": command,
        "config": render_config(exp),
        "network": dataclasses.asdict(exp.network),
        "mix_id": streams.MIX_ID,
        "seed": exp.seed,
        "n_runs": exp.n_runs,
        "policies": list(exp.policies),
    }
    if "dqn" in exp.policies:
        meta["dqn_substitution"] = "tabular Q-learning over clipped AoI states, not a neural network"
        meta["dqn_hyperparameters"] = dataclasses.asdict(presets.DQN_SUBSTITUTE)
    meta.update(extra)
    return metadata_json(meta)


def _coupling_files(cfg, policies, exp: ExperimentConfig) -> tuple[dict[str, str], dict]:
    res = run_coupled(cfg, policies, exp.seed, exp.n_runs)
    paired_rows = [
        (run, label, res.reference, float(diff[run]))
        for label, diff in res.paired.items()
        if label != res.reference
        for run in range(exp.n_runs)
    ]
    dom_rows = []
    for label in res.paired:
        if label == res.reference:
            continue
        first = res.first_violation[label]
        dom_rows.append(
            (label, res.reference, res.violations[label], *(first if first else ("", "")), float(np.mean(res.paired[label])))
        )
    files = {
        "summary.csv": summary_csv(res.summaries),
        "values.csv": values_csv(res.summaries),
        "paired.csv": render_csv(("run", "policy", "reference", "V_difference"), paired_rows),
        "dominance.csv": render_csv(
            ("policy", "reference", "violations", "first_run", "first_t", "mean_V_difference"), dom_rows
        ),
    }
    return files, {"coupled": True, "reference": res.reference, "violations": res.violations}


@click.group()
@click.option("-v", "--verbose", count=True, help="Repeat for more log output.")
def cli(verbose: int) -> None:
    """Relay AoI scheduling simulator."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", force=True)


config_arg = click.argument("config", type=str)
out_opt = click.option("--out", "out", default=None, help="Output directory (overrides the config's out).")


@cli.command()
@config_arg
@out_opt
@click.option("--trajectories", type=int, default=0, show_default=True, help="Write per-slot CSV for the first N runs.")
@click.option("--episodes", type=int, default=None, help="Q-learning episodes for learned policies.")
@click.option("--q-table", type=click.Path(exists=True, dir_okay=False), default=None, help="Use a saved Q-table.")
def simulate(config: str, out: str | None, trajectories: int, episodes: int | None, q_table: str | None) -> None:
    """Monte Carlo runs of every configured policy."""
    exp = _load(config)
    cfg = exp.network
    policies = build_policies(exp, episodes, q_table)
    extra: dict = {"coupled": exp.coupled}
    if exp.coupled:
        files, extra = _coupling_files(cfg, policies, exp)
    else:
        summaries = [run_monte_carlo(cfg, pol, exp.n_runs, exp.seed) for pol in policies]
        files = {"summary.csv": summary_csv(summaries), "values.csv": values_csv(summaries)}
    for pol in policies:
        if trajectories > 0:
            runs = range(min(trajectories, exp.n_runs))
            trajs = [run_episode(cfg, pol, OutageTape.derive(cfg, exp.seed, r)) for r in runs]
            files[f"trajectory_{pol.label}.csv"] = trajectory_csv(trajs)
    files["metadata.json"] = _metadata(exp, "simulate", **extra)
    _emit(Path(out or exp.out), files)


@cli.command()
@config_arg
@out_opt
@click.option("--episodes", type=int, default=None)
def coupled(config: str, out: str | None, episodes: int | None) -> None:
    """Run all policies on shared outage tapes; the first policy is the reference."""
    exp = _load(config)
    policies = build_policies(exp, episodes)
    files, extra = _coupling_files(exp.network, policies, exp)
    files["metadata.json"] = _metadata(exp, "coupled", **extra)
    _emit(Path(out or exp.out), files)
    for label, n in extra["violations"].items():
        if label != extra["reference"]:
            click.echo(f"{label}: {n} (run, t) pairs below {extra['reference']}")


@cli.command()
@config_arg
@out_opt
@click.option("--path-cap", type=int, default=2**24, show_default=True)
@click.option("--episodes", type=int, default=None)
def exact(config: str, out: str | None, path_cap: int, episodes: int | None) -> None:
    """Exact expected V of each policy by outcome enumeration."""
    exp = _load(config)
    rows = [(pol.label, exact_expected_value(exp.network, pol, path_cap=path_cap)) for pol in build_policies(exp, episodes)]
    for label, v in rows:
        click.echo(f"{label}\t{v!r}")
    _emit(Path(out or exp.out), {"exact.csv": render_csv(("policy", "V_exact"), rows)})


@cli.command("solve-dp")
@config_arg
@out_opt
@click.option("--state-cap", type=int, default=10**6, show_default=True)
def solve_dp(config: str, out: str | None, state_cap: int) -> None:
    """Backward induction over the reachable state space."""
    import io

    exp = _load(config)
    table = solve_backward_induction(exp.network, state_cap=state_cap)
    buf = io.StringIO()
    dump_dp_table(table, buf)
    click.echo(f"V={table.V!r} states={table.n_states}")
    _emit(Path(out or exp.out), {"dp_table.txt": buf.getvalue()})


@cli.command("train-q")
@config_arg
@out_opt
@click.option("--episodes", type=int, default=QParams.episodes, show_default=True)
@click.option("--alpha", type=float, default=QParams.alpha, show_default=True)
@click.option("--epsilon", type=float, default=QParams.epsilon, show_default=True)
@click.option("--epsilon-final", type=float, default=None, help="Decay epsilon linearly to this value.")
@click.option("--clip", type=int, default=None, help="AoI cap in the state key (default min(T, 12)).")
@click.option("--no-time", is_flag=True, help="Drop the slot index from the state key.")
def train_q(config, out, episodes, alpha, epsilon, epsilon_final, clip, no_time) -> None:
    """Train tabular Q-learning and save the table and learning curve."""
    import io

    exp = _load(config)
    params = QParams(
        episodes=episodes, alpha=alpha, epsilon=epsilon, epsilon_final=epsilon_final, clip=clip, with_time=not no_time
    )
    try:
        table = train_q_learning(exp.network, params, seed=exp.seed)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from None
    buf = io.StringIO()
    dump_q_table(table, buf)
    _emit(
        Path(out or exp.out),
        {
            "q_table.txt": buf.getvalue(),
            "training_curve.csv": render_csv(("episode", "V"), table.curve),
        },
    )


@cli.command()
@click.option("--out", default="out", show_default=True)
@click.option("--n-error-prone", type=int, default=VerifyOptions.n_error_prone, show_default=True)
@click.option("--n-errorless", type=int, default=VerifyOptions.n_errorless, show_default=True)
@click.option("--seed", type=int, default=VerifyOptions.seed, show_default=True)
@click.option("--include-coupling", is_flag=True, help="Also check pathwise coupled dominance (known to fail).")
def verify(out: str, n_error_prone: int, n_errorless: int, seed: int, include_coupling: bool) -> None:
    """Run every theory check over the instance sweep; exit 2 on any failure."""
    opts = VerifyOptions(n_error_prone=n_error_prone, n_errorless=n_errorless, seed=seed, coupling=include_coupling)
    reports = run_verify(opts)
    text = "check\tinstance\tresult\tcounterexample\tnote\n" + "".join(r.to_line() + "\n" for r in reports)
    _emit(Path(out), {"checks.txt": text})
    failed = [r for r in reports if not r.passed]
    click.echo(f"{len(reports) - len(failed)}/{len(reports)} checks passed")
    if failed:
        for r in failed[:10]:
            click.echo(r.to_line(), err=True)
        raise CheckFailure(f"{len(failed)} checks failed")


TARGETS = ("table1", *presets.FIGURES, "all")


@cli.command()
@click.argument("target", type=click.Choice(TARGETS))
@click.option("--out", default="out", show_default=True)
@click.option("--n-runs", type=int, default=10_000, show_default=True)
@click.option("--seed", type=int, default=1, show_default=True)
@click.option("--episodes", type=int, default=None, help="Override the learned-policy episode count.")
def reproduce(target: str, out: str, n_runs: int, seed: int, episodes: int | None) -> None:
    """Emit the golden greedy trace (table1) or a figure's data series as CSV."""
    if n_runs < 1:
        raise click.UsageError("--n-runs must be at least 1")
    names = ("table1", *presets.FIGURES) if target == "all" else (target,)
    qparams = _qparams(episodes, presets.DQN_SUBSTITUTE)
    files = {}
    for name in names:
        if name == "table1":
            files["table1.csv"] = presets.table1_csv()
            continue
        files[f"{name}.csv"] = presets.figure_csv(name, n_runs, seed, qparams)
        meta = presets.figure_metadata(name, n_runs, seed, qparams)
        meta["mix_id"] = streams.MIX_ID
        files[f"{name}_metadata.json"] = metadata_json(meta)
    _emit(Path(out), files)


def main(argv: list[str] | None = None) -> int:
    try:
        rv = cli.main(args=argv, prog_name="relay-aoi", standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        return EXIT_USAGE
    except BudgetExceededError as exc:
        click.echo(f"budget refused: {exc}", err=True)
        return EXIT_BUDGET
    except CheckFailure as exc:
        click.echo(str(exc), err=True)
        return EXIT_CHECK
    return rv if isinstance(rv, int) else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
