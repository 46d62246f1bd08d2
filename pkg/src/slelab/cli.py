"""Command-line entry point: ``slelab <command> [flags]``.

Exit codes: 0 on success, 2 on invalid input (usage goes to stderr), 3 when
a computation fails numerically.  ``--config FILE`` supplies defaults as
``key = value`` lines; a ``[command]`` section applies to one command only.
Flags always win over the file.
"""

from __future__ import annotations

import configparser
import csv
import math
import sys
from typing import Optional, Sequence

import click
import numpy as np

from . import gff, virasoro
from .charts import Chart
from .drivers import parse_driver
from .fieldalg import (Direction, DriverTransform, ElementaryTransform, SleParams, WittField,
                       apply_elementary, delta2, delta3, normalize)
from .flows import FlowExit
from .slesim import SimConfig, simulate_levy_tree, simulate_sle
from .zipper import RecursionCap, StepUnderflow, SwallowedPoint, Trace

NUMERICAL_ERRORS = (SwallowedPoint, StepUnderflow, RecursionCap, FlowExit, ArithmeticError,
                    np.linalg.LinAlgError)


class NumericalFailure(click.ClickException):
    exit_code = 3


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _short(x: float) -> str:
    s = format(float(x), ".12g")
    return "0" if s == "-0" else s


def _field(text: str, what: str) -> WittField:
    try:
        return WittField.parse(text)
    except ValueError as e:
        raise click.BadParameter(str(e), param_hint=what) from None


def _direction(text: str) -> Direction:
    return {"fwd": Direction.FORWARD, "rev": Direction.REVERSE}[text]


def _complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError:
        raise click.BadParameter(f"not a complex number: {text!r}") from None


# config file --------------------------------------------------------------


def read_config(path: str) -> dict[str, dict[str, str]]:
    """Flat ``key = value`` lines plus optional ``[command]`` sections."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = lambda k: k.strip().replace("-", "_").lower()
    try:
        cp.read_string("[*]\n" + text)
    except configparser.Error as e:
        raise click.BadParameter(str(e), param_hint="--config") from None
    return {s: dict(cp.items(s, raw=True)) for s in cp.sections()}


def _default_map(sections: dict[str, dict[str, str]], group: click.Group) -> dict:
    out = {}
    for name, cmd in group.commands.items():
        names = {p.name for p in cmd.params}
        vals = {k: v for k, v in sections.get("*", {}).items() if k in names}
        vals.update({k: v for k, v in sections.get(name, {}).items() if k in names})
        unknown = set(sections.get(name, {})) - names
        if unknown:
            raise click.BadParameter(f"unknown keys for {name}: {sorted(unknown)}", param_hint="--config")
        out[name] = vals
    return out


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.option("--config", type=click.Path(exists=True, dir_okay=False), default=None,
              help="key = value defaults file; flags override it.")
@click.pass_context
def cli(ctx: click.Context, config: Optional[str]):
    """Slit Loewner chains, SLE sampling and coupling checks."""
    if config:
        ctx.default_map = _default_map(read_config(config), cli)


# output -------------------------------------------------------------------


def write_trace_csv(trace: Trace, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["index", "kind", "t", "x", "y"])
    for i, kind, t, p in trace.points:
        w.writerow([i, kind, _fmt(t), _fmt(p.real), _fmt(p.imag)])


def write_arcs_csv(trace: Trace, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["arc", "index", "x", "y"])
    for a, arc in enumerate(trace.arcs):
        for i, p in enumerate(arc):
            w.writerow([a, i, _fmt(p.real), _fmt(p.imag)])


def read_trace_csv(fh, chart=Chart.HALFPLANE, arcs_fh=None) -> Trace:
    rows = list(csv.reader(fh))
    if not rows or rows[0] != ["index", "kind", "t", "x", "y"]:
        raise ValueError("trace CSV must start with the header index,kind,t,x,y")
    pts = [(int(r[0]), r[1], float(r[2]), complex(float(r[3]), float(r[4]))) for r in rows[1:] if r]
    arcs: list[np.ndarray] = []
    if arcs_fh is not None:
        rows = list(csv.reader(arcs_fh))
        if not rows or rows[0] != ["arc", "index", "x", "y"]:
            raise ValueError("arc CSV must start with the header arc,index,x,y")
        groups: dict[int, list[complex]] = {}
        for r in rows[1:]:
            if r:
                groups.setdefault(int(r[0]), []).append(complex(float(r[2]), float(r[3])))
        arcs = [np.array(groups[k]) for k in sorted(groups)]
    return Trace(pts, Chart.parse(chart), arcs)


def _svg_points(ps) -> str:
    return " ".join(f"{p.real:.6g},{-p.imag:.6g}" for p in ps)


def svg_text(trace: Trace, chart=None) -> str:
    """SVG 1.1 drawing of the a-point polyline, or of the arcs if present."""
    chart = Chart.parse(chart if chart is not None else trace.chart)
    pts = [p[3] for p in trace.points if p[1] == "a"]
    if len(pts) < 2 and not trace.arcs:
        raise ValueError("need at least two points to render")
    allp = np.concatenate([np.asarray(pts, dtype=complex)] + [np.asarray(a, dtype=complex) for a in trace.arcs])
    body: list[str] = []
    if chart is Chart.DISK:
        x0, y0, w, h = -1.05, -1.05, 2.1, 2.1
        sw = 0.004
        body.append(f'<circle class="boundary" cx="0" cy="0" r="1" fill="none" stroke="gray" stroke-width="{sw}"/>')
    else:
        xmin, xmax = float(allp.real.min()), float(allp.real.max())
        ymax = max(float(allp.imag.max()), 1e-3)
        ymin = min(float(allp.imag.min()), 0.0)
        span = max(xmax - xmin, ymax - ymin, 1e-3)
        pad = 0.05 * span
        x0, w = xmin - pad, xmax - xmin + 2 * pad
        y0, h = -(ymax + pad), ymax - ymin + 2 * pad
        sw = 0.004 * span
        lines = [0.0] + ([math.pi] if chart is Chart.STRIP else [])
        for yl in lines:
            body.append(f'<path class="boundary" d="M {x0:.6g} {-yl:.6g} H {x0 + w:.6g}" '
                        f'stroke="gray" stroke-width="{sw:.3g}"/>')
    style = f'fill="none" stroke="black" stroke-width="{sw:.3g}"'
    if trace.arcs:
        for arc in trace.arcs:
            body.append(f'<polyline class="arc" points="{_svg_points(arc)}" {style}/>')
    elif len(pts) == 2:
        (a, b) = pts
        body.append(f'<line class="trace" x1="{a.real:.6g}" y1="{-a.imag:.6g}" '
                    f'x2="{b.real:.6g}" y2="{-b.imag:.6g}" {style}/>')
    else:
        body.append(f'<polyline class="trace" points="{_svg_points(pts)}" {style}/>')
    head = ('<?xml version="1.0" encoding="UTF-8"?>\n'
            '<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
            f'viewBox="{x0:.6g} {y0:.6g} {w:.6g} {h:.6g}">\n')
    return head + "\n".join(body) + "\n</svg>\n"


def render_svg(trace: Trace, chart, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(svg_text(trace, chart))


def _open_out(path: str):
    return sys.stdout if path == "-" else open(path, "w", encoding="utf-8", newline="")


# commands -----------------------------------------------------------------


CHARTS = click.Choice([c.value for c in Chart])
DIRECTIONS = click.Choice(["fwd", "rev"])


@cli.command()
@click.option("--delta", default="-2:2", show_default=True, help="drift field, n:coeff list")
@click.option("--sigma", default="-1:-1", show_default=True, help="normalized diffusion field")
@click.option("--kappa", type=float, default=4.0, show_default=True)
@click.option("--nu", type=float, default=0.0, show_default=True)
@click.option("--driver", default=None, help="det:<name> or levy:alpha=<a>; overrides kappa/nu")
@click.option("--dmin", type=float, default=5e-3, show_default=True)
@click.option("--dmax", type=float, default=1e-2, show_default=True)
@click.option("--nmax", type=int, default=2000, show_default=True)
@click.option("--T", "T", type=float, default=1e8, show_default=True)
@click.option("--chart", type=CHARTS, default="halfplane", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", default="-", show_default=True, help="trace CSV path or - for stdout")
@click.option("--arcs-out", default=None, help="arc polyline CSV (Levy trees)")
@click.option("--svg", default=None, help="also render an SVG")
def simulate(delta, sigma, kappa, nu, driver, dmin, dmax, nmax, T, chart, seed, out, arcs_out, svg):
    """Sample a resolution-controlled SLE trace."""
    d, s = _field(delta, "--delta"), _field(sigma, "--sigma")
    try:
        cfg = SimConfig(dmin, dmax, nmax, T, chart, seed)
        params = SleParams(kappa, nu)
        path = parse_driver(driver, seed) if driver else None
    except ValueError as e:
        raise click.UsageError(str(e)) from None
    try:
        if path is not None and path.kind == "levy":
            trace = simulate_levy_tree(d, s, path.alpha, cfg, driver=path)
        else:
            trace = simulate_sle(d, s, params, cfg, driver=path)
    except NUMERICAL_ERRORS as e:
        raise NumericalFailure(f"simulation failed: {e}") from None
    fh = _open_out(out)
    try:
        write_trace_csv(trace, fh)
    finally:
        if fh is not sys.stdout:
            fh.close()
    if arcs_out:
        with open(arcs_out, "w", encoding="utf-8", newline="") as fh:
            write_arcs_csv(trace, fh)
    if svg:
        render_svg(trace, cfg.chart, svg)
    if trace.truncated:
        click.echo("warning: n_max reached before T", err=True)


@cli.command()
@click.option("--delta", required=True, help="semicomplete field, modes -2..1")
@click.option("--sigma", required=True, help="complete field, modes -1..1")
def classify(delta, sigma):
    """Classify delta and sigma and report kappa, nu."""
    d, s = _field(delta, "--delta"), _field(sigma, "--sigma")
    try:
        c3, c2 = delta3(d), delta2(s)
    except ValueError as e:
        raise click.UsageError(str(e)) from None
    v3 = 0.0 if c3.kind.value == "parabolic" else c3.discriminant
    v2 = 0.0 if c2.kind.value == "parabolic" else c2.discriminant
    line = f"delta: {c3.kind.value} (Δ3={_short(v3)}); sigma: {c2.kind.value} (Δ2={_short(v2)})"
    try:
        p = normalize(d, s)[2]
        line += f"; kappa={_short(p.kappa)}; nu={_short(p.nu)}"
    except ValueError:
        line += "; kappa=n/a; nu=n/a"
    click.echo(line)


@cli.command()
@click.option("--delta", required=True)
@click.option("--sigma", required=True)
@click.option("--op", "ops", multiple=True, required=True,
              help="TAG:c with TAG in V,T,D,R,S,P; repeat to compose left to right")
def transform(delta, sigma, ops):
    """Apply elementary transforms to (delta, sigma) and the driver."""
    d, s = _field(delta, "--delta"), _field(sigma, "--sigma")
    try:
        steps = []
        for op in ops:
            tag, sep, c = op.partition(":")
            if not sep:
                raise ValueError(f"bad --op {op!r}; expected TAG:c")
            steps.append(ElementaryTransform(tag.strip().upper(), float(c)))
    except ValueError as e:
        raise click.UsageError(str(e)) from None
    out = (d, s)
    drv = DriverTransform()
    for t in steps:
        d2, s2, drv = apply_elementary(t, out[0], out[1], drv)
        out = (d2, s2)
    click.echo(f"delta: {out[0].to_text()}")
    click.echo(f"sigma: {out[1].to_text()}")
    click.echo(f"driver: u_t -> {_short(drv.a)} u_({_short(drv.b)} t) + {_short(drv.d)} t")
    try:
        p = normalize(*out)[2]
        click.echo(f"kappa={_short(p.kappa)}; nu={_short(p.nu)}")
    except ValueError:
        pass


def _table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    widths = [max(len(h), *(len(r[i]) for r in rows)) for i, h in enumerate(header)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths))]
    lines += ["  ".join(c.ljust(w) for c, w in zip(r, widths)) for r in rows]
    return "\n".join(line.rstrip() for line in lines)


@cli.command("couple-check")
@click.option("--case", "name", type=click.Choice(list(gff.ALL_CASES)), required=True)
@click.option("--direction", type=DIRECTIONS, default="fwd", show_default=True)
@click.option("--kappa", type=float, default=4.0, show_default=True)
@click.option("--nu", type=float, default=0.0, show_default=True)
@click.option("--xi", type=float, default=None, help="time-change / fixed-point parameter")
@click.option("--points", type=int, default=20, show_default=True)
@click.option("--tol", type=float, default=1e-4, show_default=True)
@click.option("--mc", default=None, help="paths,t,z e.g. 10000,0.5,2i")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--csv", "csv_path", default=None, help="also write the report as CSV")
def couple_check(name, direction, kappa, nu, xi, points, tol, mc, seed, csv_path):
    """Check the three coupling equations (and optionally the martingale MC)."""
    try:
        if points < 1:
            raise ValueError("--points must be positive")
        case = gff.coupling_case(name, _direction(direction), kappa, nu, xi=xi)
        if name in ("dn", "twisted") and direction == "rev":
            raise ValueError(f"{name} coupling is forward only")
        mc_args = None
        if mc:
            parts = mc.split(",")
            if len(parts) != 3:
                raise ValueError("--mc expects paths,t,z")
            mc_args = (int(parts[0]), float(parts[1]), _complex(parts[2]))
            if case.chart is not Chart.HALFPLANE:
                raise ValueError("--mc needs a half-plane case")
    except (ValueError, click.BadParameter) as e:
        raise click.UsageError(str(e)) from None
    rng = np.random.default_rng(seed)
    pts = gff.sample_points(case, points, rng)
    try:
        r = gff.coupling_residuals(case, pts)
        res = gff.mc_martingale(case, mc_args[2], mc_args[1], mc_args[0],
                                gff.McConfig(seed=seed)) if mc_args else None
    except NUMERICAL_ERRORS as e:
        raise NumericalFailure(f"coupling check failed: {e}") from None
    ok = max(r) <= tol
    header = ["case", "direction", "kappa", "nu", "r1", "r2", "r3", "tol", "status"]
    row = [name, direction, _short(kappa), _short(nu), *(f"{x:.3e}" for x in r), f"{tol:.1e}",
           "PASS" if ok else "FAIL"]
    click.echo(_table(header, [row]))
    rows_csv = [header, row]
    if res is not None:
        mok = res.z_score <= 3 and not res.flagged
        mh = ["paths", "t", "z", "mean", "target", "stderr", "z-score", "stopped", "status"]
        mrow = [str(res.n_paths), _short(mc_args[1]), str(mc_args[2]), f"{res.mean:.6f}",
                f"{res.target:.6f}", f"{res.stderr:.2e}", f"{res.z_score:.2f}", str(res.stopped),
                "PASS" if mok else "FAIL"]
        click.echo("")
        click.echo(_table(mh, [mrow]))
        rows_csv += [mh, mrow]
    if csv_path:
        with open(csv_path, "w", encoding="utf-8", newline="") as fh:
            csv.writer(fh, lineterminator="\n").writerows(rows_csv)


@cli.command("vir-check")
@click.option("--kappa", type=float, required=True)
@click.option("--nu", type=float, default=0.0, show_default=True)
@click.option("--direction", type=DIRECTIONS, default="fwd", show_default=True)
def vir_check(kappa, nu, direction):
    """Expand A|> for the chordal pair and test the singular-vector condition."""
    if not kappa > 0:
        raise click.BadParameter("kappa must be positive", param_hint="--kappa")
    d = _direction(direction)
    s = d.sign
    delta = WittField({-2: 2.0 * s, -1: -nu})
    sigma = WittField({-1: -math.sqrt(kappa)})
    hw = virasoro.hc_from_kappa(kappa, d)
    a = virasoro.ahat_vacuum(delta, sigma, hw)
    sing = virasoro.singular_check(kappa, d)
    ok = virasoro.martingale_condition(delta, sigma, kappa, d)
    click.echo(f"h={_short(hw.h)}; c={_short(hw.c)}")
    click.echo(f"A|> = {a}")
    click.echo(f"singular vector annihilated by L1, L2: {'yes' if sing else 'no'}")
    click.echo(f"L_-1 coefficient: {_short(a[(1,)])}")
    click.echo(f"martingale condition: {'PASS' if ok else 'FAIL'}")


@cli.command("trace-render")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--arcs", "arcs_path", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--chart", type=CHARTS, default="halfplane", show_default=True)
@click.option("--out", required=True, help="SVG path")
def trace_render(in_path, arcs_path, chart, out):
    """Render a trace CSV (and optional arc CSV) to SVG."""
    try:
        with open(in_path, encoding="utf-8", newline="") as fh:
            arcs_fh = open(arcs_path, encoding="utf-8", newline="") if arcs_path else None
            try:
                trace = read_trace_csv(fh, chart, arcs_fh)
            finally:
                if arcs_fh:
                    arcs_fh.close()
        text = svg_text(trace, chart)
    except ValueError as e:
        raise click.UsageError(str(e)) from None
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(text)


# entry points -------------------------------------------------------------


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Run the CLI and return its exit code instead of exiting."""
    try:
        cli.main(args=list(argv) if argv is not None else None, prog_name="slelab",
                 standalone_mode=False)
    except click.ClickException as e:
        e.show()
        return e.exit_code
    except click.exceptions.Exit as e:
        return e.exit_code
    except click.Abort:
        click.echo("Aborted!", err=True)
        return 1
    return 0


def main() -> None:
    sys.exit(run())
