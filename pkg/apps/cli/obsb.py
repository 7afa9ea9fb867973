"""
Command-line frontend for scenario runs, the gallery table and the property suites.

This module is a **thin UI layer**:
- It parses flags and renders summaries with rich.
- It delegates the work to `core.engine.ScenarioEngine` and `core.properties`.
- Machine-readable output goes to files only (report JSON + CSV traces).

Commands
--------
run <scenario.yaml> [--out-dir DIR] [--budget N] [--tol T] [--parallel]
gallery
properties [--seed S] [--trials N] [--suite NAME ...]

Exit codes: 0 done (whatever the verdicts), 1 property violations,
2 scenario/input errors, 3 numeric errors.
"""

from pathlib import Path
import sys

# Allow "core" imports when running from repo root or this file's folder
sys.path.append(str(Path(__file__).resolve().parents[2]))

from typing import Any

import click
from dotenv import load_dotenv
load_dotenv()

from rich.console import Console
from rich.table import Table

from chains.gallery import galleryTable
from core import __version__, settings
from core.engine import ScenarioEngine
from core.errors import NumericError, ObsbError, ScenarioError
from core.properties import SUITES, runPropertySuites
from core.scenario import loadScenario

console = Console()
errConsole = Console(stderr=True)

EXIT_OK, EXIT_VIOLATION, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3
VERDICT_STYLE = {"pass": "green", "fail": "red", "inconclusive": "yellow", True: "green", False: "red"}


def verdictOf(summary: dict[str, Any]) -> Any:
    """The headline of an analysis summary: its verdict, else its ok flag."""
    if "verdict" in summary:
        return summary["verdict"]
    return summary.get("ok", summary.get("flag", "-"))


def styled(value: Any) -> str:
    style = VERDICT_STYLE.get(value) if isinstance(value, (str, bool)) else None
    text = str(value)
    return f"[{style}]{text}[/{style}]" if style else text


def printSummaryTable(bundle: dict[str, Any]) -> None:
    tbl = Table(title=f"{bundle['chain']['label']} ({bundle['chain']['family']})")
    tbl.add_column("id", style="bold")
    tbl.add_column("kind")
    tbl.add_column("verdict")
    tbl.add_column("details", overflow="fold")
    for a in bundle["analyses"]:
        s = a["summary"]
        rest = ", ".join(f"{k}={v}" for k, v in s.items() if k not in ("verdict", "ok"))
        tbl.add_row(a["id"], a["kind"], styled(verdictOf(s)), rest)
    console.print(tbl)


@click.group()
@click.version_option(__version__, prog_name="obsb")
def cli() -> None:
    """Markov chains on ordered Banach spaces with a base: ergodicity and Doeblin analyses."""


@cli.command()
@click.argument("scenario_path", type=click.Path(dir_okay=False))
@click.option("--out-dir", default=None, help="Report folder (default OBSB_OUT_DIR).")
@click.option("--budget", type=int, default=None, help="δ search budget for every analysis.")
@click.option("--tol", type=float, default=None, help="Cone membership tolerance override.")
@click.option("--parallel/--sequential", default=False, help="Thread independent per-k traces.")
def run(scenario_path: str, out_dir: str, budget: int, tol: float, parallel: bool) -> None:
    """Run every analysis of SCENARIO_PATH and write the report bundle."""
    try:
        scenario = loadScenario(scenario_path)
        engine = ScenarioEngine(scenario, out_dir, budget, tol, parallel, name=Path(scenario_path).stem)
        console.rule(f"[bold]{engine.name}")
        bundle = engine.run()
        paths = engine.write(bundle)
    except ScenarioError as e:
        errConsole.print(f"[red]Scenario error[/red] {e.path}: {e}")
        sys.exit(EXIT_INPUT)
    except NumericError as e:
        errConsole.print(f"[red]Numeric error in analysis '{e.detail.get('analysis', '?')}':[/red] {e}")
        sys.exit(EXIT_NUMERIC)
    except ObsbError as e:
        errConsole.print(f"[red]Input error:[/red] {e}")
        sys.exit(EXIT_INPUT)

    printSummaryTable(bundle)
    for p in paths:
        console.print(f"[dim]wrote {p}[/dim]")
    sys.exit(EXIT_OK)


@cli.command()
def gallery() -> None:
    """List the named chain families with their expected verdicts."""
    tbl = Table(title="Gallery")
    tbl.add_column("family", style="bold")
    tbl.add_column("expected")
    tbl.add_column("notes", style="dim")
    for row in galleryTable():
        tbl.add_row(row["family"], row["expected"], row["notes"])
    console.print(tbl)
    # plain lines for grep and scripts
    for row in galleryTable():
        click.echo(f"{row['family']} | {row['expected']}")


@cli.command()
@click.option("--seed", type=int, default=settings.SEED, show_default=True)
@click.option("--trials", type=int, default=100, show_default=True)
@click.option("--suite", "suites", multiple=True, type=click.Choice(SUITES), help="Restrict to these suites.")
def properties(seed: int, trials: int, suites: tuple[str, ...]) -> None:
    """Randomized invariant suites for the numerical core."""
    try:
        report = runPropertySuites(seed, trials, suites or None)
    except ObsbError as e:
        errConsole.print(f"[red]Input error:[/red] {e}")
        sys.exit(EXIT_INPUT)

    tbl = Table(title=f"properties (seed {seed}, {trials} trials)")
    tbl.add_column("suite", style="bold")
    tbl.add_column("checked")
    tbl.add_column("violations")
    for name, res in report["suites"].items():
        n = len(res["violations"])
        tbl.add_row(name, str(res["checked"]), f"[green]0[/green]" if n == 0 else f"[red]{n}[/red]")
    console.print(tbl)

    if report["ok"]:
        sys.exit(EXIT_OK)
    for name, res in report["suites"].items():
        for v in res["violations"][:10]:
            click.echo(f"violation suite={name} seed={v['trial_seed']} property={v['property']}")
    sys.exit(EXIT_VIOLATION)


def main() -> None:
    cli()


if __name__ == "__main__":
    main()
