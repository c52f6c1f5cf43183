"""`flock` command-line interface.

Exit codes: 0 ok, 2 parse/validation error, 3 constraint violation
(setup conflict always; rejected commands under --strict), 4 I/O error.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .errors import (
    ConstraintViolation,
    EmptyWindow,
    IoError,
    ParseError,
    SetupConflict,
    VcflockError,
)

EXIT_PARSE = 2
EXIT_CONSTRAINT = 3
EXIT_IO = 4


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


@click.group()
def main():
    """Virtual-centroid flocking simulator."""


@main.command()
@click.option("--scenario", "scenario_ref", required=True,
              help="Scenario file path or preset name.")
@click.option("--out", "out_dir", required=True, type=click.Path(),
              help="Output directory for trace.csv, metrics.csv, events.log.")
@click.option("--realtime", is_flag=True, help="Throttle ticks to wall clock.")
@click.option("--serve", "serve_port", type=int, default=None,
              help="Expose the run on a telemetry endpoint at this port.")
@click.option("--strict", is_flag=True,
              help="Exit nonzero if any command is rejected.")
@click.option("--repeat", type=int, default=None,
              help="Run N times into run_### subdirectories.")
@click.option("--seed-base", type=int, default=None,
              help="First seed for --repeat (default: scenario seed).")
@click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE",
              help="Override a scenario field, e.g. agents.model=ideal.")
def run(scenario_ref, out_dir, realtime, serve_port, strict, repeat,
        seed_base, overrides):
    """Run a scenario headless (optionally serving telemetry)."""
    from .runner import run_ref

    try:
        parsed = dict(o.split("=", 1) for o in overrides)
    except ValueError:
        _fail(EXIT_PARSE, "--set expects KEY=VALUE")
    try:
        if serve_port is not None:
            from .bridge import serve_run
            result = serve_run(scenario_ref, out_dir, port=serve_port,
                               overrides=parsed, realtime=realtime,
                               strict=strict)
            results = [result]
        else:
            results = run_ref(scenario_ref, out_dir, overrides=parsed,
                              strict=strict, realtime=realtime,
                              repeat=repeat, seed_base=seed_base)
    except ParseError as e:
        _fail(EXIT_PARSE, str(e))
    except (SetupConflict, ConstraintViolation) as e:
        _fail(EXIT_CONSTRAINT, str(e))
    except IoError as e:
        _fail(EXIT_IO, str(e))
    except EmptyWindow as e:
        _fail(EXIT_PARSE, f"metrics window is empty: {e}")
    except VcflockError as e:
        _fail(EXIT_CONSTRAINT, str(e))
    for r in results:
        click.echo(f"{r.scenario.name}: wrote {r.trace_path} "
                   f"({r.wall_time:.2f} s wall)")
        if r.rejected_commands:
            click.echo(f"  {len(r.rejected_commands)} command(s) rejected",
                       err=True)


@main.command()
@click.option("--trace", "trace_path", required=True, type=click.Path(),
              help="trace.csv produced by `flock run`.")
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="Metrics output path (default: metrics.csv next to trace).")
@click.option("--dmax", type=float, default=None, help="Cohesion ceiling (m).")
@click.option("--dmin", type=float, default=None, help="Separation floor (m).")
@click.option("--delta", type=float, default=None,
              help="Alignment ceiling (m/s).")
@click.option("--window", nargs=2, type=float, default=None,
              help="Steady-state window t0 t1 (absolute seconds).")
def metrics(trace_path, out_path, dmax, dmin, delta, window):
    """Recompute the metrics report from a persisted trace."""
    from .runner import compute_metrics_file

    try:
        out = compute_metrics_file(trace_path, out_path, d_max=dmax,
                                   d_min=dmin, delta=delta,
                                   window=tuple(window) if window else None)
    except ParseError as e:
        _fail(EXIT_PARSE, str(e))
    except EmptyWindow as e:
        _fail(EXIT_PARSE, f"metrics window is empty: {e}")
    except IoError as e:
        _fail(EXIT_IO, str(e))
    click.echo(f"wrote {out}")


@main.group()
def formation():
    """Formation document utilities."""


@formation.command("gen")
@click.option("--shape", required=True,
              type=click.Choice(["regular", "line", "square", "grid", "custom"]))
@click.option("--n", type=int, default=None, help="Slot count (regular/line).")
@click.option("--radius", type=float, default=None,
              help="Ring radius d_max in meters (regular).")
@click.option("--spacing", type=float, default=None,
              help="Slot spacing in meters (line/grid).")
@click.option("--side", type=float, default=None, help="Square side (m).")
@click.option("--rows", type=int, default=None, help="Grid rows.")
@click.option("--cols", type=int, default=None, help="Grid cols.")
@click.option("--dmin", type=float, required=True, help="Separation floor (m).")
@click.option("--from-file", "from_file", type=click.Path(), default=None,
              help="Source document to validate and re-emit (custom).")
@click.option("--name", default=None, help="Formation name.")
@click.option("--out", "out_path", required=True, type=click.Path())
def formation_gen(shape, n, radius, spacing, side, rows, cols, dmin,
                  from_file, name, out_path):
    """Generate a formation document."""
    from .formation import dump_formation, load_formation
    from .scenario import build_formation

    try:
        if shape == "custom":
            if not from_file:
                _fail(EXIT_PARSE, "--shape custom requires --from-file")
            spec = load_formation(Path(from_file).read_text())
        else:
            node = {"kind": shape, "d_min": dmin}
            if name:
                node["name"] = name
            if shape == "regular":
                node.update(n=n, d_max=radius)
            elif shape == "line":
                node.update(n=n, spacing=spacing)
            elif shape == "square":
                node.update(side=side)
            elif shape == "grid":
                node.update(rows=rows, cols=cols, spacing=spacing)
            if any(v is None for v in node.values()):
                missing = [k for k, v in node.items() if v is None]
                _fail(EXIT_PARSE, f"--shape {shape} needs {missing}")
            spec = build_formation({"shape": node})
        Path(out_path).write_text(dump_formation(spec))
    except ParseError as e:
        _fail(EXIT_PARSE, str(e))
    except ConstraintViolation as e:
        _fail(EXIT_CONSTRAINT, str(e))
    except OSError as e:
        _fail(EXIT_IO, str(e))
    click.echo(f"wrote {out_path}")


@main.group()
def scenarios():
    """Scenario preset utilities."""


@scenarios.command("list")
def scenarios_list():
    """List the shipped scenario presets."""
    from .scenario import load_preset, preset_names

    for name in preset_names():
        sc = load_preset(name)
        click.echo(f"{name}: {len(sc.formation.slots)} agents, "
                   f"{sc.model.mode}, v_max {sc.trajectory.v_max} m/s")


if __name__ == "__main__":
    main()
