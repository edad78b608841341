"""Command line for estimating, comparing, sweeping and reporting runs.

Every number printed here is computed by the library; the commands only
load inputs, call the corresponding operation and format its result.
Machine-readable output goes to stdout, diagnostics to stderr. Exit
codes: 0 on success, 2 on validation problems, 3 when a run finished
without reaching its accuracy target (the partial result is still
printed).
"""

from __future__ import annotations

import csv
import glob as globlib
import sys
from dataclasses import replace
from pathlib import Path

import click

from fedcarbon.simulator import (
    RUN_CSV_HEADER,
    RunResult,
    compare_runs,
    live_seed_study,
    read_run_csv,
    run_scenario,
    write_run_csv,
)
from fedcarbon.stores import (
    DataStoreError,
    Stores,
    load_emission_factors,
    load_scenario,
    load_traces,
)
from fedcarbon.sweep import (
    SCATTER_CSV_HEADER,
    SWEEP_CSV_HEADER,
    load_grid,
    pareto_front,
    read_sweep_csv,
    sweep,
    write_scatter_csv,
    write_sweep_csv,
)

EXIT_VALIDATION = 2
EXIT_UNREACHED = 3

RUN_SUMMARY_HEADER = [
    "scenario_id",
    "mode",
    "reached",
    "rounds",
    "total_seconds",
    "total_wh",
    "total_co2_g",
    "max_accuracy",
]


def _fail(message: str, code: int):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load_stores(factors_path: str | None = None, traces_path: str | None = None) -> Stores:
    stores = Stores.load()
    if factors_path is not None:
        stores = replace(stores, factors=load_emission_factors(factors_path))
    if traces_path is not None:
        points = Path(traces_path)
        meta = points.with_name(points.stem + "_meta" + (points.suffix or ".csv"))
        stores = replace(stores, traces=load_traces(points, meta))
    return stores


def _grams(value: float) -> str:
    return f"{value:.2f}"


def _run_row(result: RunResult) -> list[str]:
    rounds = "" if result.rounds_to_target is None else str(result.rounds_to_target)
    return [
        result.scenario_id,
        result.mode,
        "true" if result.reached else "false",
        rounds,
        repr(result.total_seconds),
        repr(result.total_watt_hours),
        repr(result.total_co2_grams),
        repr(result.max_accuracy),
    ]


def _print_run_table(result: RunResult) -> None:
    rounds = "-" if result.rounds_to_target is None else str(result.rounds_to_target)
    click.echo(f"scenario      {result.scenario_id}")
    click.echo(f"mode          {result.mode}")
    click.echo(f"reached       {'true' if result.reached else 'false'}")
    click.echo(f"rounds        {rounds}")
    click.echo(f"wall_time_s   {result.total_seconds:.1f}")
    click.echo(f"energy_wh     {result.total_watt_hours:.2f}")
    click.echo(f"co2_g         {_grams(result.total_co2_grams)}")
    click.echo(f"max_accuracy  {result.max_accuracy:.3f}")


@click.group()
def main() -> None:
    """Carbon accounting for federated and centralized training runs."""


@main.command()
@click.option("--scenario", "scenario_path", required=True, type=click.Path())
@click.option(
    "--factors",
    "factors_path",
    type=click.Path(),
    default=None,
    help="Override the bundled emission factors with this CSV.",
)
@click.option(
    "--traces",
    "traces_path",
    type=click.Path(),
    default=None,
    help="Override the bundled traces with this CSV (expects a sibling *_meta.csv).",
)
@click.option(
    "--format",
    "fmt",
    type=click.Choice(["table", "csv"]),
    default="table",
    show_default=True,
)
@click.option(
    "--out",
    "out_path",
    type=click.Path(),
    default=None,
    help="Also write the per-round log CSV here.",
)
def estimate(
    scenario_path: str,
    factors_path: str | None,
    traces_path: str | None,
    fmt: str,
    out_path: str | None,
) -> None:
    """Estimate rounds, wall time, energy and CO2 for one scenario."""
    try:
        stores = _load_stores(factors_path, traces_path)
        scenario = load_scenario(scenario_path)
        result = run_scenario(scenario, stores)
        if out_path is not None:
            write_run_csv(result, out_path)
    except (DataStoreError, OSError) as exc:
        _fail(str(exc), EXIT_VALIDATION)
    if fmt == "csv":
        click.echo(",".join(RUN_SUMMARY_HEADER))
        click.echo(",".join(_run_row(result)))
    else:
        _print_run_table(result)
    if out_path is not None:
        click.echo(f"wrote {out_path}", err=True)
    if not result.reached:
        sys.exit(EXIT_UNREACHED)


@main.command()
@click.option("--fl", "fl_path", required=True, type=click.Path())
@click.option("--centralized", "centralized_path", required=True, type=click.Path())
@click.option(
    "--format",
    "fmt",
    type=click.Choice(["table", "csv"]),
    default="table",
    show_default=True,
)
def compare(fl_path: str, centralized_path: str, fmt: str) -> None:
    """Run two scenarios and print their CO2 and wall-time ratios."""
    try:
        stores = Stores.load()
        fl_result = run_scenario(load_scenario(fl_path), stores)
        centralized_result = run_scenario(load_scenario(centralized_path), stores)
    except (DataStoreError, OSError) as exc:
        _fail(str(exc), EXIT_VALIDATION)
    comparison = compare_runs(fl_result, centralized_result)
    ratios = [comparison.co2_ratio, comparison.wall_time_ratio]
    if fmt == "csv":
        click.echo(",".join(["kind", *RUN_SUMMARY_HEADER, "co2_ratio", "wall_time_ratio"]))
        formatted = ["" if r is None else repr(r) for r in ratios]
        click.echo(",".join(["fl", *_run_row(fl_result), *formatted]))
        click.echo(",".join(["centralized", *_run_row(centralized_result), "", ""]))
    else:
        for kind, result in (("fl", fl_result), ("centralized", centralized_result)):
            rounds = "-" if result.rounds_to_target is None else str(result.rounds_to_target)
            click.echo(
                f"{kind:<12} {result.scenario_id:<40} reached={'true' if result.reached else 'false':<6}"
                f" rounds={rounds:<5} co2_g={_grams(result.total_co2_grams):<10}"
                f" wall_time_s={result.total_seconds:.1f}"
            )
        for name, ratio in zip(("co2_ratio", "wall_time_ratio"), ratios):
            click.echo(f"{name:<16} {'-' if ratio is None else f'{ratio:.2f}'}")
    if not (fl_result.reached and centralized_result.reached):
        sys.exit(EXIT_UNREACHED)


@main.command("sweep")
@click.option("--grid", "grid_path", required=True, type=click.Path())
@click.option("--base", "base_path", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
def sweep_command(grid_path: str, base_path: str, out_path: str) -> None:
    """Score every grid setup; write sweep, pareto and scatter CSVs."""
    try:
        stores = Stores.load()
        grid = load_grid(grid_path)
        base = load_scenario(base_path)
        result = sweep(grid, base, stores)
        out = Path(out_path)
        suffix = out.suffix or ".csv"
        scatter_path = out.with_name(out.stem + "_scatter" + suffix)
        pareto_path = out.with_name(out.stem + "_pareto" + suffix)
        scatter_points = [p for p in result.scored if p.target is None] or list(result.scored)
        write_sweep_csv(result.points, out)
        write_scatter_csv(scatter_points, scatter_path)
        write_scatter_csv(list(pareto_front(scatter_points)), pareto_path)
    except (DataStoreError, OSError) as exc:
        _fail(str(exc), EXIT_VALIDATION)
    click.echo(f"points={len(result.points)} scored={len(result.scored)} na={len(result.na)}")
    best = result.best
    if best is not None:
        target = "stable" if best.target is None else repr(best.target)
        click.echo(
            f"best: partitioning={best.partitioning} local_epochs={best.local_epochs}"
            f" n={best.clients_per_round} target={target} rounds={best.rounds}"
            f" co2_g={_grams(best.co2_grams)} carbon_cost={_grams(best.carbon_cost)}"
        )
    click.echo(f"wrote {out} {pareto_path} {scatter_path}", err=True)


@main.command()
@click.option("--live-config", "config_path", required=True, type=click.Path())
@click.option("--seeds", "seed_count", type=int, default=20, show_default=True)
def simulate(config_path: str, seed_count: int) -> None:
    """Run a live config across seeds under both shard skews."""
    if seed_count < 1:
        _fail("--seeds must be >= 1", EXIT_VALIDATION)
    try:
        stores = Stores.load()
        scenario = load_scenario(config_path)
    except (DataStoreError, OSError) as exc:
        _fail(str(exc), EXIT_VALIDATION)
    try:
        studies = live_seed_study(scenario, stores, seed_count)
    except DataStoreError as exc:
        _fail(str(exc), EXIT_VALIDATION)
    click.echo("partitioning,seeds,reached,mean_rounds,stddev_rounds")
    for study in studies:
        mean = "" if study.mean_rounds is None else repr(study.mean_rounds)
        stddev = "" if study.stddev_rounds is None else repr(study.stddev_rounds)
        click.echo(f"{study.partitioning},{study.seeds},{study.reached},{mean},{stddev}")


def _scatter_from_sweep_rows(rows: list[dict[str, str]]) -> list[tuple[str, str, str]]:
    scored = [row for row in rows if not row["na_reason"]]
    stable = [row for row in scored if row["target"] == "stable"]
    points = []
    for row in stable or scored:
        skew = "iid" if row["partitioning"] == "IID" else "noniid"
        label = f"n{int(row['n']):02d}_{row['local_epochs']}ep_{skew}"
        points.append((row["co2_g"], row["accuracy"], label))
    return points


@main.command()
@click.option("--runs", "runs_glob", required=True, help="Glob of run or sweep CSV files.")
@click.option("--out", "out_path", required=True, type=click.Path())
def report(runs_glob: str, out_path: str) -> None:
    """Merge run CSVs into one file plus CO2-vs-accuracy scatter data."""
    paths = sorted(globlib.glob(runs_glob))
    if not paths:
        _fail(f"no files match {runs_glob!r}", EXIT_VALIDATION)
    merged_rows: list[list[str]] = []
    scatter_rows: list[tuple[str, str, str]] = []
    seen: set[str] = set()
    deduped = 0
    try:
        for path in paths:
            with open(path, newline="") as handle:
                header = next(csv.reader(handle), None)
            if header == SWEEP_CSV_HEADER:
                scatter_rows.extend(_scatter_from_sweep_rows(read_sweep_csv(path)))
                continue
            if header == SCATTER_CSV_HEADER:
                click.echo(f"skipping plot data file {path}", err=True)
                continue
            groups: dict[str, list[dict[str, str]]] = {}
            for row in read_run_csv(path):
                groups.setdefault(row["scenario_id"], []).append(row)
            for scenario_id, rows in groups.items():
                if scenario_id in seen:
                    deduped += 1
                    click.echo(
                        f"warning: duplicate scenario_id {scenario_id!r} in {path}; keeping first",
                        err=True,
                    )
                    continue
                seen.add(scenario_id)
                for row in rows:
                    merged_rows.append([*(row[name] for name in RUN_CSV_HEADER), path])
                best_accuracy = max(float(row["accuracy"]) for row in rows)
                scatter_rows.append(
                    (rows[-1]["cum_co2_g"], repr(best_accuracy), scenario_id)
                )
        out = Path(out_path)
        scatter_path = out.with_name(out.stem + "_scatter" + (out.suffix or ".csv"))
        with open(out, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow([*RUN_CSV_HEADER, "source_file"])
            writer.writerows(merged_rows)
        with open(scatter_path, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(SCATTER_CSV_HEADER)
            writer.writerows(scatter_rows)
    except (DataStoreError, OSError) as exc:
        _fail(str(exc), EXIT_VALIDATION)
    click.echo(
        f"files={len(paths)} run_rows={len(merged_rows)}"
        f" scatter_points={len(scatter_rows)} deduped={deduped}"
    )
    click.echo(f"wrote {out} {scatter_path}", err=True)


if __name__ == "__main__":
    main()
