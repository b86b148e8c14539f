"""Command-line experiment runner writing deterministic CSV.

Usage::

    secharq {discrete,rayleigh,tradeoff,closedform,optimize} [--config PATH]
            [--seed N] [--trials N] [--out PATH] [--protocol P] [--set KEY=VALUE ...]

The config is a flat ``key = value`` file (an ``[experiment]`` header is
optional). ``--set`` and the dedicated flags override file values. Output
starts with ``#`` metadata lines (schema, tool version, seed, config hash)
followed by a header row and data rows in a fixed column order.

Exit codes: 0 success (infeasible verdicts included), 2 config error,
3 numeric nonconvergence.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import io
import math
import sys
from dataclasses import dataclass

from secharq import __version__
from secharq.channel import DiscreteStateDist, RayleighParams, db_to_linear
from secharq.closedform import (
    ConvergenceError,
    InfeasibleError,
    OutageConstraints,
    compatible,
    max_secrecy_rate_one_tx,
)
from secharq.lattice import LatticeEvaluator
from secharq.montecarlo import McConfig, MonteCarloEvaluator
from secharq.optimizer import Grids, optimize, optimize_per_rate, tradeoff_curve, _axis

SCHEMA_VERSION = 1
COMMANDS = ("discrete", "rayleigh", "tradeoff", "closedform", "optimize")
PROTOCOLS = ("asr", "tang", "tomasin")
_SECTION = "experiment"

# Every key the runner understands; anything else is a config error.
KNOWN_KEYS = {
    "protocol", "l", "d_states", "e_states", "gamma_d", "gamma_e", "gamma_d_db", "gamma_e_db",
    "constraints", "xi_c", "xi_s", "seed", "trials", "eve_trials", "batch_size", "out",
    "r", "r_step", "r_max", "r1_step", "r1_lo", "r1_hi", "r2_step", "r2_max",
    "tradeoff_r1_max", "tradeoff_r1_step", "tradeoff_r2_max", "tradeoff_r2_step", "evaluator",
    "lattice_step",
}


class ConfigError(ValueError):
    pass


def fmt(x) -> str:
    """Deterministic cell formatting."""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x, ".10g")
    return str(x)


@dataclass
class Table:
    columns: list
    rows: list


# ---------------------------------------------------------------- config


def load_config(path: str | None, overrides: dict) -> dict:
    values: dict = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not text.lstrip().startswith("["):
            text = f"[{_SECTION}]\n" + text
        parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"malformed config: {exc}") from exc
        for section in parser.sections():
            for k, v in parser.items(section):
                values[k.lower()] = v.strip()
    for k, v in overrides.items():
        if v is not None:
            values[k.lower()] = str(v).strip()
    unknown = sorted(set(values) - KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    return values


def config_hash(values: dict) -> str:
    canon = "\n".join(f"{k}={values[k]}" for k in sorted(values) if k != "out")
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def _float(values: dict, key: str, default=None) -> float:
    if key not in values:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default
    try:
        v = float(values[key])
    except ValueError as exc:
        raise ConfigError(f"{key}: not a number: {values[key]!r}") from exc
    if math.isnan(v):
        raise ConfigError(f"{key}: NaN is not allowed")
    return v


def _int(values: dict, key: str, default=None) -> int:
    if key not in values:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default
    try:
        return int(values[key])
    except ValueError as exc:
        raise ConfigError(f"{key}: not an integer: {values[key]!r}") from exc


def _int_list(values: dict, key: str, default=None) -> list:
    if key not in values:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return list(default)
    try:
        out = [int(x) for x in values[key].split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"{key}: expected comma-separated integers") from exc
    if not out or any(v < 1 for v in out):
        raise ConfigError(f"{key}: values must be integers >= 1")
    return out


def _pairs(text: str, key: str) -> list:
    out = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        parts = item.split(":")
        if len(parts) != 2:
            raise ConfigError(f"{key}: expected 'a:b' items, got {item!r}")
        try:
            out.append((float(parts[0]), float(parts[1])))
        except ValueError as exc:
            raise ConfigError(f"{key}: non-numeric item {item!r}") from exc
    if not out:
        raise ConfigError(f"{key}: empty list")
    return out


def parse_protocols(values: dict, default=("asr",)) -> list:
    raw = values.get("protocol")
    if raw is None:
        return list(default)
    names = [p.strip().lower() for p in raw.split(",") if p.strip()]
    if names == ["all"]:
        return list(PROTOCOLS)
    for n in names:
        if n not in PROTOCOLS:
            raise ConfigError(f"protocol must be one of {', '.join(PROTOCOLS)} or all, got {n!r}")
    if not names:
        raise ConfigError("protocol: empty list")
    return names


def parse_discrete(values: dict) -> DiscreteStateDist:
    for key in ("d_states", "e_states"):
        if key not in values or not values[key].strip():
            raise ConfigError(f"{key}: empty state list")
    try:
        return DiscreteStateDist(_pairs(values["d_states"], "d_states"), _pairs(values["e_states"], "e_states"))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid discrete model: {exc}") from exc


def _gamma(values: dict, link: str) -> float:
    lin, db = f"gamma_{link}", f"gamma_{link}_db"
    if lin in values and db in values:
        raise ConfigError(f"give only one of {lin} and {db}")
    if db in values:
        return db_to_linear(_float(values, db))
    return _float(values, lin)


def parse_rayleigh(values: dict) -> RayleighParams:
    try:
        return RayleighParams(_gamma(values, "d"), _gamma(values, "e"))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid Rayleigh model: {exc}") from exc


def parse_constraints(values: dict) -> list:
    try:
        if "constraints" in values:
            return [OutageConstraints(c, s) for c, s in _pairs(values["constraints"], "constraints")]
        return [OutageConstraints(_float(values, "xi_c", 1.0), _float(values, "xi_s", 1.0))]
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid constraints: {exc}") from exc


def parse_grids(values: dict, discrete: bool) -> Grids:
    base = Grids.discrete_default() if discrete else Grids()
    r_max = values.get("r_max")
    try:
        return Grids(
            r_step=_float(values, "r_step", base.r_step),
            r_max=float(r_max) if r_max is not None else base.r_max,
            r1_step=_float(values, "r1_step", base.r1_step),
            r1_lo=float(values["r1_lo"]) if "r1_lo" in values else None,
            r1_hi=float(values["r1_hi"]) if "r1_hi" in values else None,
            r2_step=_float(values, "r2_step", base.r2_step),
            r2_max=_float(values, "r2_max", base.r2_max),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid grid: {exc}") from exc


def parse_mc(values: dict, default_trials: int) -> McConfig:
    eve = values.get("eve_trials")
    try:
        return McConfig(
            n_trials=_int(values, "trials", default_trials),
            seed=_int(values, "seed", 0),
            batch_size=_int(values, "batch_size", 1 << 18),
            n_eve_trials=int(eve) if eve is not None else None,
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid Monte Carlo settings: {exc}") from exc


def _single_L(values: dict) -> int:
    Ls = _int_list(values, "l")
    if len(Ls) != 1:
        raise ConfigError("l: this command takes a single value")
    return Ls[0]


def _single_constraint(values: dict) -> OutageConstraints:
    cs = parse_constraints(values)
    if len(cs) != 1:
        raise ConfigError("constraints: this command takes a single pair")
    return cs[0]


def _model(values: dict):
    if "d_states" in values or "e_states" in values:
        return parse_discrete(values)
    return parse_rayleigh(values)


# -------------------------------------------------------------- commands


def cmd_discrete(values: dict) -> Table:
    model = parse_discrete(values)
    L = _single_L(values)
    cons = _single_constraint(values)
    protocols = parse_protocols(values, PROTOCOLS)
    grids = parse_grids(values, discrete=True)
    columns = ["R"]
    per_proto = {}
    for p in protocols:
        columns += [f"eta_{p}", f"r1_{p}", f"r2_{p}"]
        per_proto[p] = optimize_per_rate(p, model, cons, L, grids)
    r_axis = _axis(0.0, grids.r_max if grids.r_max is not None else L * max(v for v, _ in model.d_states),
                   grids.r_step)
    rows = []
    for i, r in enumerate(r_axis):
        row = [float(r)]
        for p in protocols:
            res = per_proto[p][i]
            if res.feasible:
                row += [res.report.eta, res.r1, res.r2]
            else:
                row += [math.nan, math.nan, math.nan]
        rows.append(row)
    return Table(columns, rows)


_REPORT_COLS = ["eta", "p_co", "p_so", "e_l", "se_eta", "se_p_co", "se_p_so", "se_e_l"]


def _report_cells(rep) -> list:
    if rep is None:
        return [math.nan] * len(_REPORT_COLS)
    return [rep.eta, rep.p_co, rep.p_so, rep.e_l, rep.se_eta, rep.se_p_co, rep.se_p_so, rep.se_e_l]


def _evaluator(values: dict, model):
    if isinstance(model, RayleighParams):
        return LatticeEvaluator(model, _float(values, "lattice_step", 0.002))
    return None


def cmd_rayleigh(values: dict) -> Table:
    model = parse_rayleigh(values)
    L = _single_L(values)
    protocols = parse_protocols(values)
    grids = parse_grids(values, discrete=False)
    mc = parse_mc(values, 10**5)
    ev = _evaluator(values, model)
    columns = ["protocol", "xi_c", "xi_s", "R", "r1", "r2", "feasible"] + _REPORT_COLS
    rows = []
    for cons in parse_constraints(values):
        for p in protocols:
            for res in optimize_per_rate(p, model, cons, L, grids, ev, rescore=mc):
                if res.schedule is None:
                    continue
                rows.append([p, cons.xi_c, cons.xi_s, res.r, res.r1, res.r2, res.feasible]
                            + _report_cells(res.report))
    return Table(columns, rows)


def cmd_tradeoff(values: dict) -> Table:
    model = parse_rayleigh(values)
    Ls = _int_list(values, "l", (1, 2, 4, 8))
    protocols = parse_protocols(values, ("asr", "tang"))
    r = _float(values, "r", 0.0)
    r1_values = _axis(0.0, _float(values, "tradeoff_r1_max", 30.0), _float(values, "tradeoff_r1_step", 0.5))
    r2_values = _axis(0.0, _float(values, "tradeoff_r2_max", 8.0), _float(values, "tradeoff_r2_step", 0.25))
    kind = values.get("evaluator", "mc")
    if kind not in ("mc", "lattice"):
        raise ConfigError("evaluator must be mc or lattice")
    mc = parse_mc(values, 10**5)
    columns = ["protocol", "L", "p_co", "p_so", "se_p_co", "se_p_so", "r1", "r2"]
    rows = []
    for L in Ls:
        ev = MonteCarloEvaluator(model, mc) if kind == "mc" else _evaluator(values, model)
        for p in protocols:
            for pt in tradeoff_curve(p, model, L, r, r1_values, r2_values, ev):
                r2 = pt.schedule.dummy[1] if L > 1 else 0.0
                rows.append([p, L, pt.p_co, pt.p_so, pt.se_p_co, pt.se_p_so, pt.schedule.dummy[0], r2])
    return Table(columns, rows)


def cmd_closedform(values: dict) -> Table:
    model = parse_rayleigh(values)
    columns = ["xi_c", "xi_s", "gamma_d", "gamma_e", "verdict", "r_max"]
    rows = []
    for cons in parse_constraints(values):
        ok = compatible(cons, model.gamma_d, model.gamma_e)
        try:
            r_max = max_secrecy_rate_one_tx(cons, model.gamma_d, model.gamma_e)
        except InfeasibleError:
            r_max = math.nan
        rows.append([cons.xi_c, cons.xi_s, model.gamma_d, model.gamma_e,
                     "compatible" if ok else "infeasible", r_max])
    return Table(columns, rows)


def cmd_optimize(values: dict) -> Table:
    model = _model(values)
    L = _single_L(values)
    protocols = parse_protocols(values, PROTOCOLS if isinstance(model, DiscreteStateDist) else ("asr", "tang"))
    discrete = isinstance(model, DiscreteStateDist)
    grids = parse_grids(values, discrete=discrete)
    rescore = None if discrete else parse_mc(values, 10**6)
    ev = _evaluator(values, model)
    columns = ["protocol", "xi_c", "xi_s", "R", "r1", "r2", "feasible", "active"] + _REPORT_COLS
    rows = []
    for cons in parse_constraints(values):
        for p in protocols:
            res = optimize(p, model, cons, L, grids, ev, rescore=rescore)
            rows.append([p, cons.xi_c, cons.xi_s, res.r, res.r1, res.r2, res.feasible,
                         "+".join(res.active) or "none"] + _report_cells(res.report))
    return Table(columns, rows)


HANDLERS = {
    "discrete": cmd_discrete,
    "rayleigh": cmd_rayleigh,
    "tradeoff": cmd_tradeoff,
    "closedform": cmd_closedform,
    "optimize": cmd_optimize,
}


def render(command: str, values: dict, table: Table) -> str:
    buf = io.StringIO()
    buf.write(f"# schema: secharq-{command}/v{SCHEMA_VERSION}\n")
    buf.write(f"# tool: secharq {__version__}\n")
    buf.write(f"# seed: {values.get('seed', '0')}\n")
    buf.write(f"# config_sha256: {config_hash(values)}\n")
    buf.write(",".join(table.columns) + "\n")
    for row in table.rows:
        buf.write(",".join(fmt(x) for x in row) + "\n")
    return buf.getvalue()


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="secharq", description="Secure IR-HARQ outage and throughput experiments.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", metavar="PATH")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--trials", type=int)
    ap.add_argument("--out", metavar="PATH")
    ap.add_argument("--protocol", help="asr, tang, tomasin, a comma list, or all")
    ap.add_argument("--set", dest="sets", action="append", default=[], metavar="KEY=VALUE",
                    help="override a config key (repeatable)")
    return ap


def run(argv=None) -> tuple[int, str, str | None]:
    """Execute a command; returns (exit code, CSV text or error message, output path)."""
    args = build_parser().parse_args(argv)
    try:
        overrides = {}
        for item in args.sets:
            if "=" not in item:
                raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
            k, v = item.split("=", 1)
            overrides[k.strip()] = v
        if args.seed is not None and args.seed < 0:
            raise ConfigError("seed must be a nonnegative integer")
        overrides.update(seed=args.seed, trials=args.trials, protocol=args.protocol, out=args.out)
        values = load_config(args.config, overrides)
        table = HANDLERS[args.command](values)
        return 0, render(args.command, values, table), values.get("out")
    except ConvergenceError as exc:
        return 3, f"numeric error: {exc}", None
    except ValueError as exc:
        # ConfigError and module precondition failures alike.
        return 2, f"config error: {exc}", None


def main(argv=None) -> int:
    code, text, out = run(argv)
    if code != 0:
        print(text, file=sys.stderr)
        return code
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
