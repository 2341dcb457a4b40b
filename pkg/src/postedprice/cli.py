"""``ppp``: command-line front end.

Every subcommand writes a table (JSON array of objects, or CSV) to stdout or
``--output``.  Exit status is 0 on success, 1 when a computation fails and 2
on a usage error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, is_dataclass

from . import gaps, welfare
from ._workers import default_workers
from .dist import is_regular, parse_distribution
from .exante import DEFAULT_BUDGET_GRID, exante_general, exante_regular
from .pricing import discriminatory_revenue, optimal_anonymous, optimal_discriminatory
from .sim import generator_metadata, simulate_revenue, simulate_welfare

REPRODUCE_TARGETS = ("uniform-gap", "exponential-gap", "irregular-lb", "regular-lb", "bound-table")
_REPRODUCE_DEFAULT_N = {
    "uniform-gap": range(1, 31),
    "exponential-gap": range(1, 401),
    "irregular-lb": range(2, 11),
    "regular-lb": (2, 4, 8),
    "bound-table": range(1, 21),
}


# --- output -----------------------------------------------------------------

def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".17g")
    if isinstance(v, (list, tuple)):
        return ";".join(_csv_cell(x) for x in v)
    return str(v)


def _json_value(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, (list, tuple)):
        return [_json_value(x) for x in v]
    return v


def _as_dict(row) -> dict:
    if is_dataclass(row):
        return asdict(row)
    if hasattr(row, "_asdict"):
        return row._asdict()
    return dict(row)


def format_table(rows, fmt: str, columns=None) -> str:
    rows = [_as_dict(r) for r in rows]
    if columns is None:
        columns = list(rows[0]) if rows else []
    for r in rows:
        if list(r) != list(columns):
            raise ValueError(f"rows are not homogeneous: {list(r)} vs {list(columns)}")
    if fmt == "json":
        return json.dumps([{k: _json_value(r[k]) for k in columns} for r in rows], allow_nan=False) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_csv_cell(r[k]) for k in columns])
        return buf.getvalue()
    raise ValueError(f"unknown format {fmt!r}")


def emit_table(rows, fmt: str, destination=None, columns=None) -> None:
    """Write ``rows`` (dicts, dataclasses or named tuples) as CSV or JSON.

    ``destination`` is a path, a text stream, or None for stdout.
    """
    text = format_table(rows, fmt, columns)
    if destination is None:
        sys.stdout.write(text)
    elif hasattr(destination, "write"):
        destination.write(text)
    else:
        try:
            with open(destination, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise OSError(f"cannot write {destination}: {exc.strerror or exc}") from exc


# --- argument parsing ---------------------------------------------------------

def _n_range(text: str) -> list[int]:
    lo, sep, hi = text.partition(":")
    try:
        a = int(lo)
        b = int(hi) if sep else a
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected N or A:B, got {text!r}") from None
    if a < 1 or b < a:
        raise argparse.ArgumentTypeError(f"need 1 <= A <= B, got {text!r}")
    return list(range(a, b + 1))


def _dist(text: str):
    try:
        return parse_distribution(text)
    except (ValueError, OSError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _prices(text: str) -> tuple[float, ...]:
    try:
        prices = tuple(float(s) for s in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated prices, got {text!r}") from None
    if any(not math.isfinite(p) or p < 0 for p in prices):
        raise argparse.ArgumentTypeError("prices must be finite and nonnegative")
    return prices


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return v


def _seed(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer seed, got {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


class _Parser(argparse.ArgumentParser):
    # usage errors raise instead of exiting so run() can return 2
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


class _UsageError(Exception):
    pass


DIST_HELP = "uniform:LO,HI | exp:LAMBDA | gpd:MU,LAMBDA,XI | plr:R,EPS | discrete:PATH (CSV with header value,prob)"


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default="json", help="output format (default json)")
    common.add_argument("--output", "-o", metavar="PATH", help="write to PATH instead of stdout")

    p = _Parser(
        prog="ppp",
        description="Sequential posted pricing: optimal anonymous and discriminatory prices, "
        "ex-ante relaxation, revenue gaps and Monte Carlo checks.",
        epilog="PPP_THREADS caps the number of worker threads (default: core count).",
    )
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    def with_dist(sp):
        sp.add_argument("--dist", type=_dist, required=True, metavar="SPEC", help=DIST_HELP)

    def with_n(sp, required=True, default=None):
        sp.add_argument("--n", type=_n_range, required=required, default=default, metavar="N|A:B",
                        help="number of bidders, or an inclusive range")

    sp = sub.add_parser("prices", parents=[common], help="optimal anonymous and discriminatory prices")
    with_dist(sp)
    with_n(sp)

    sp = sub.add_parser("gap", parents=[common], help="R^a, R^d, R^x, their ratios and bounds")
    with_dist(sp)
    with_n(sp)
    sp.add_argument("--budget-grid", type=_positive_int, default=DEFAULT_BUDGET_GRID,
                    help="budget grid for irregular continuous ex-ante (default %(default)s)")

    sp = sub.add_parser("bounds", parents=[common], help="closed-form worst-case ratios")
    with_n(sp)

    sp = sub.add_parser("exante", parents=[common], help="ex-ante relaxation")
    with_dist(sp)
    with_n(sp)
    sp.add_argument("--budget-grid", type=_positive_int, default=DEFAULT_BUDGET_GRID)

    sp = sub.add_parser("lowerbound", parents=[common], help="tight lower-bound instances")
    sp.add_argument("--kind", choices=("irregular", "regular"), required=True)
    with_n(sp)
    sp.add_argument("--eps", type=float, default=None, help="construction parameter (default 1e-6 / 1e-5)")

    sp = sub.add_parser("welfare", parents=[common], help="welfare recursion W_k and thresholds")
    with_dist(sp)
    with_n(sp)

    sp = sub.add_parser("simulate", parents=[common], help="Monte Carlo revenue or welfare for a price vector")
    with_dist(sp)
    sp.add_argument("--pv", type=_prices, required=True, metavar="P1,P2,...", help="price for each arriving bidder")
    sp.add_argument("--objective", choices=("revenue", "welfare"), default="revenue")
    sp.add_argument("--trials", type=_positive_int, default=10**6)
    sp.add_argument("--seed", type=_seed, default=0)

    sp = sub.add_parser("reproduce", parents=[common], help="bundled experiments")
    sp.add_argument("target", choices=REPRODUCE_TARGETS)
    with_n(sp, required=False)
    return p


# --- subcommands ----------------------------------------------------------------

def _cmd_prices(a):
    rows = []
    for n in a.n:
        anon = optimal_anonymous(a.dist, n)
        disc = optimal_discriminatory(a.dist, n)
        rows.append({
            "n": n,
            "pv": list(disc.prices),
            "revenue": disc.revenue,
            "anonymous_price": anon.price,
            "anonymous_revenue": anon.revenue,
        })
    return rows


def _cmd_gap(a):
    workers = min(default_workers(), len(a.n))
    return gaps.gap_batch(a.dist, a.n, workers=workers, budget_grid=a.budget_grid)


def _bound_rows(ns):
    return [{"n": n, "general": gaps.bound_general(n), "regular": gaps.bound_regular(n)} for n in ns]


def _cmd_exante(a):
    rows = []
    regular = is_regular(a.dist)
    for n in a.n:
        if regular:
            res = exante_regular(a.dist, n)
            q, value, method = [res.q_star] * n, res.value, "symmetric"
        else:
            res = exante_general(a.dist, n, a.budget_grid)
            q, value, method = list(res.allocation), res.value, "dp"
        rows.append({"n": n, "R_x": value, "q": q, "method": method})
    return rows


def _lower_rows(kind, ns, eps=None):
    rows = []
    for n in ns:
        rep = gaps.lower_bound_report(kind, n, eps)
        rows.append({"kind": kind, **asdict(rep)})
    return rows


def _cmd_welfare(a):
    rows = []
    for n in a.n:
        t = welfare.welfare_prices(a.dist, n)
        rows.extend({"n": n, "k": k, "W": t.W[k], "p_W": t.p_W[k]} for k in range(n + 1))
    return rows


def _cmd_simulate(a):
    fn = simulate_revenue if a.objective == "revenue" else simulate_welfare
    res = fn(a.dist, a.pv, a.trials, a.seed)
    if a.objective == "revenue":
        analytic = discriminatory_revenue(a.dist, a.pv)
    else:
        analytic = welfare.welfare_of_prices(a.dist, a.pv)
    meta = generator_metadata()
    return [{
        "objective": a.objective,
        "pv": list(a.pv),
        "trials": res.trials,
        "seed": res.seed,
        "mean": res.mean,
        "std_error": res.std_error,
        "analytic": analytic,
        "generator": meta["generator"],
        "numpy": meta["numpy"],
        "shard_size": meta["shard_size"],
    }]


def _gap_table_rows(family, ns):
    table = welfare.gap_table(family, ns, workers=min(default_workers(), 8))
    best = table.argmax.n
    return [{**r._asdict(), "argmax": r.n == best} for r in table.rows]


def _cmd_reproduce(a):
    ns = a.n if a.n is not None else list(_REPRODUCE_DEFAULT_N[a.target])
    if a.target == "uniform-gap":
        return _gap_table_rows("uniform", ns)
    if a.target == "exponential-gap":
        return _gap_table_rows("exponential", ns)
    if a.target == "irregular-lb":
        return _lower_rows("irregular", ns)
    if a.target == "regular-lb":
        return _lower_rows("regular", ns)
    return _bound_rows(ns)


COMMANDS = {
    "prices": _cmd_prices,
    "gap": _cmd_gap,
    "bounds": lambda a: _bound_rows(a.n),
    "exante": _cmd_exante,
    "lowerbound": lambda a: _lower_rows(a.kind, a.n, a.eps),
    "welfare": _cmd_welfare,
    "simulate": _cmd_simulate,
    "reproduce": _cmd_reproduce,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return 2
    except SystemExit as exc:
        # --help exits 0
        return int(exc.code or 0)
    try:
        rows = COMMANDS[args.command](args)
        emit_table(rows, args.format, args.output)
    except (ValueError, ArithmeticError, OSError) as exc:
        print(f"ppp {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
