"""``spinsense`` command line: run | img | verify | crossover.

Exit codes: 0 success, 1 verification failure, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import metrics, oracle, verify

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2

AUTO_GRID_POINTS = 200

DEFAULTS = {
    "channel": "dephasing",
    "state": "ghz",
    "n": "2",
    "gamma": "1",
    "rates": None,
    "phi": 1.0,
    "delta": 0.0,
    "t_grid": "auto",
    "out": None,
    "format": "csv",
    "config": None,
}
COMMAND_DEFAULTS = {
    "run": {"tol": 1e-8},
    "img": {"tol": 1e-8},
    "verify": {"tol": 1e-6, "n_max": 3, "channel": None},
    "crossover": {"n": "2,4,8"},
}


class UsageError(Exception):
    pass


def parse_int_list(text) -> list[int]:
    """``"4"``, ``"1:6"`` (inclusive) or ``"2,4,8"``."""
    if isinstance(text, int):
        return [text]
    if isinstance(text, list):
        return [int(v) for v in text]
    text = str(text).strip()
    try:
        if ":" in text:
            lo, hi = (int(v) for v in text.split(":"))
            if hi < lo:
                raise UsageError(f"empty range {text!r}")
            return list(range(lo, hi + 1))
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"cannot parse integer list {text!r}") from exc


def parse_float_list(text) -> list[float]:
    if text is None:
        return []
    if isinstance(text, (int, float)):
        return [float(text)]
    if isinstance(text, list):
        return [float(v) for v in text]
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"cannot parse number list {text!r}") from exc


def parse_time_grid(spec: str, sc: metrics.SensingScenario | None = None) -> np.ndarray:
    spec = str(spec).strip()
    if spec == "auto":
        if sc is None:
            raise UsageError("auto grid needs a scenario")
        try:
            return metrics.auto_times(sc, AUTO_GRID_POINTS)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    kind, _, rest = spec.partition(":")
    if kind == "log":
        parts = rest.split(":")
        if len(parts) != 3:
            raise UsageError(f"expected log:COUNT:LO:HI, got {spec!r}")
        try:
            count, lo, hi = int(parts[0]), float(parts[1]), float(parts[2])
        except ValueError as exc:
            raise UsageError(f"cannot parse time grid {spec!r}") from exc
        if count < 1:
            raise UsageError("time grid is empty")
        if not 0 < lo <= hi:
            raise UsageError("log grid needs 0 < LO <= HI")
        times = np.geomspace(lo, hi, count)
    elif kind == "list":
        times = np.array(parse_float_list(rest))
        if times.size == 0:
            raise UsageError("time grid is empty")
    else:
        raise UsageError(f"unknown time grid {spec!r}; use auto, log:COUNT:LO:HI or list:v1,v2,...")
    if np.any(times < 0) or np.any(np.diff(times) <= 0):
        raise UsageError("times must be non-negative and strictly ascending")
    return times


@dataclass
class RunConfig:
    command: str
    values: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    def resolved(self) -> dict:
        out = {k: v for k, v in sorted(self.values.items()) if k != "config"}
        if "n" in out:
            out["n"] = parse_int_list(out["n"])
        for key in ("gamma", "rates"):
            if out.get(key) is not None:
                out[key] = parse_float_list(out[key])
        return out


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Built-in defaults, then the JSON config file, then explicit flags."""
    values = dict(DEFAULTS)
    values.update(COMMAND_DEFAULTS.get(args.command, {}))
    if args.config:
        try:
            with open(args.config) as fh:
                file_values = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config!r}: {exc}") from exc
        if not isinstance(file_values, dict):
            raise UsageError("config file must hold a flat JSON object")
        for key, val in file_values.items():
            key = key.replace("-", "_")
            if key not in values:
                raise UsageError(f"unknown config key {key!r}")
            values[key] = val
    for key, val in vars(args).items():
        if key in ("command", "func") or val is None:
            continue
        values[key] = val
    if values.get("format") not in ("csv", "json"):
        raise UsageError(f"format must be csv or json, got {values.get('format')!r}")
    return RunConfig(args.command, values)


def scenario_from(cfg: RunConfig, n: int, gamma: float) -> metrics.SensingScenario:
    rates = parse_float_list(cfg["rates"]) or None
    state = cfg["state"]
    if state == "delta" and n != 1:
        raise UsageError("the delta state needs --n 1")
    if rates is not None and (cfg["channel"] != "dephasing" or state != "product"):
        raise UsageError("--rates is only valid for dephasing of product states")
    try:
        return metrics.SensingScenario(
            n=n,
            channel=cfg["channel"],
            state=state,
            gamma=gamma,
            phi=float(cfg["phi"]),
            rates=tuple(rates) if rates else None,
            delta=float(cfg["delta"]),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def _json_value(v):
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return None
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    return v


def write_table(cfg: RunConfig, columns: list[str], rows: list[list]) -> None:
    if cfg["format"] == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
        text = buf.getvalue()
    else:
        doc = {
            "metadata": {"command": cfg.command, **cfg.resolved()},
            "rows": [{c: _json_value(v) for c, v in zip(columns, row)} for row in rows],
        }
        text = json.dumps(doc, indent=2) + "\n"
    if cfg["out"]:
        with open(cfg["out"], "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _single(values: list, what: str):
    if len(values) != 1:
        raise UsageError(f"run takes a single {what}, got {values}")
    return values[0]


def cmd_run(cfg: RunConfig) -> int:
    n = _single(parse_int_list(cfg["n"]), "--n")
    gamma = _single(parse_float_list(cfg["gamma"]), "--gamma")
    sc = scenario_from(cfg, n, gamma)
    times = parse_time_grid(cfg["t_grid"], sc)
    try:
        curve = metrics.gain_curve(sc, times, rel_tol=float(cfg["tol"]))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    cf = curve.closed_form_gain
    rows = [
        [t, q, g, None if cf is None else cf[i], img]
        for i, (t, q, g, img) in enumerate(zip(curve.times, curve.qfi, curve.gain, curve.img_cumulative))
    ]
    write_table(cfg, ["t", "qfi", "gain", "gain_closed_form", "img_cumulative"], rows)
    return EXIT_OK


def cmd_img(cfg: RunConfig) -> int:
    ns = parse_int_list(cfg["n"])
    gammas = parse_float_list(cfg["gamma"])
    if not ns or not gammas:
        raise UsageError("need at least one --n and one --gamma")
    if any(g <= 0 for g in gammas):
        raise UsageError("every --gamma must be positive for the integrated gain")
    rows = []
    for n in ns:
        for g in gammas:
            sc = scenario_from(cfg, n, g)
            try:
                numeric = metrics.integrated_gain(sc, rel_tol=float(cfg["tol"]))
            except ValueError as exc:
                raise UsageError(str(exc)) from exc
            try:
                ref = metrics.closed_form_img(sc)
                closed, bound = ref.value, ref.upper_bound
                dev = abs(numeric / closed - 1) if closed else abs(numeric)
            except metrics.UncoveredScenarioError:
                closed = bound = dev = None
            rows.append([n, g, numeric, closed, bound, dev])
    write_table(cfg, ["n", "gamma", "img_numeric", "img_closed_form", "bound", "rel_deviation"], rows)
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    n_max = int(cfg["n_max"])
    if n_max < 1:
        raise UsageError("--n-max must be at least 1")
    if n_max > oracle.ORACLE_N_MAX:
        raise UsageError(f"--n-max {n_max} exceeds the oracle cap of {oracle.ORACLE_N_MAX}")
    chans = (cfg["channel"],) if cfg["channel"] else metrics.CHANNELS
    tol = float(cfg["tol"])
    failed = 0
    for res in verify.run_all(n_max, chans, tol):
        print(res.line(), flush=True)
        failed += not res.passed
    print(f"{failed} check(s) failed" if failed else "all checks passed")
    return EXIT_VERIFY_FAILED if failed else EXIT_OK


def cmd_crossover(cfg: RunConfig) -> int:
    ns = parse_int_list(cfg["n"])
    gammas = parse_float_list(cfg["gamma"])
    if any(n < 2 for n in ns):
        raise UsageError("crossover needs every N >= 2")
    if any(g <= 0 for g in gammas):
        raise UsageError("crossover needs gamma > 0")
    rows = []
    for n in ns:
        for g in gammas:
            c = metrics.gain_ratio_crossover(n, g, cfg["channel"])
            rows.append([n, g, c.t_star, c.analytic_reference])
    write_table(cfg, ["n", "gamma", "t_star", "analytic_reference"], rows)
    return EXIT_OK


COMMANDS = {"run": cmd_run, "img": cmd_img, "verify": cmd_verify, "crossover": cmd_crossover}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="spinsense", description="Metrological gain of dissipative spin ensembles.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, scenario=True):
        p.add_argument("--config", help="flat JSON file; explicit flags override it")
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"))
        p.add_argument("--tol", type=float)
        p.add_argument("--channel", choices=metrics.CHANNELS)
        if scenario:
            p.add_argument("--state", choices=metrics.STATES)
            p.add_argument("--n", help="INT, LO:HI or comma list")
            p.add_argument("--gamma", help="FLOAT or comma list")
            p.add_argument("--rates", help="per-site dephasing rates, comma list")
            p.add_argument("--phi", type=float)
            p.add_argument("--delta", type=float)

    p = sub.add_parser("run", help="sample Q(t), G(t) and the running integral")
    common(p)
    p.add_argument("--t-grid", dest="t_grid", help="auto | log:COUNT:LO:HI | list:v1,v2,...")

    p = sub.add_parser("img", help="integrated gain table")
    common(p)

    p = sub.add_parser("verify", help="analytic vs RK4 oracle and closed-form checks")
    common(p, scenario=False)
    p.add_argument("--n-max", dest="n_max", type=int)

    p = sub.add_parser("crossover", help="time where entanglement stops paying off")
    common(p, scenario=False)
    p.add_argument("--n", help="comma list or LO:HI of N >= 2")
    p.add_argument("--gamma", help="FLOAT or comma list")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg)
    except UsageError as exc:
        print(f"spinsense {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
