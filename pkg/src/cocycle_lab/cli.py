"""Command line front end.

    cocycle-lab le --set lam=1000 --set E=0.5 --refine
    cocycle-lab scan --config desk.cfg --jobs 8
    cocycle-lab lemmas list

Configuration comes from a key=value file (--config) and --set overrides.
Every output begins with a '#' block echoing the configuration and the
package version.  Floats are written with 17 significant digits.
"""
import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .arithmetic import parse_alpha
from .cocycle import QpCocycle, potential_from_name
from .errors import CocycleLabError, ConfigError

DEFAULTS = {
    "alpha": "golden",
    "potential": "cos",
    "n": 10000,
    "x_grid": 2048,
    "seed": 0,
}


# ------------------------------------------------------------------ config

def parse_value(text):
    text = text.strip()
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    return text


def read_config_file(path):
    out = {}
    try:
        fh = open(path)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    with fh:
        for no, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{no}: expected key = value")
            k, v = line.split("=", 1)
            out[k.strip()] = parse_value(v)
    return out


def build_config(args):
    cfg = dict(DEFAULTS)
    if args.config:
        cfg.update(read_config_file(args.config))
    for item in args.set or ():
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        cfg[k.strip()] = parse_value(v)
    if "lambda" in cfg and "lam" not in cfg:
        cfg["lam"] = cfg.pop("lambda")
    return cfg


def need(cfg, key, kind=float):
    if key not in cfg:
        raise ConfigError(f"missing required key '{key}'")
    try:
        return kind(cfg[key])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"key '{key}' has bad value {cfg[key]!r}") from exc


def jobs_from(args):
    if args.jobs is not None:
        return max(1, args.jobs)
    env = os.environ.get("COCYCLE_LAB_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"COCYCLE_LAB_JOBS must be an integer, got {env!r}") from exc
    return 1


def energies(cfg):
    """E from 'E' (one value or a comma list) or from E_min, E_max, E_count."""
    if "E" in cfg:
        raw = cfg["E"]
        vals = [parse_value(s) for s in raw.split(",")] if isinstance(raw, str) else [raw]
        try:
            return np.array([float(v) for v in vals])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"key 'E' has bad value {raw!r}") from exc
    if "E_min" in cfg or "E_max" in cfg:
        return np.linspace(need(cfg, "E_min"), need(cfg, "E_max"), need(cfg, "E_count", int))
    raise ConfigError("missing required key 'E' (or E_min, E_max, E_count)")


def family(cfg):
    alpha = cfg["alpha"]
    try:
        a = float(parse_alpha(str(alpha)))
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"key 'alpha' has bad value {alpha!r}") from exc
    params = {k[len("potential_"):]: v for k, v in cfg.items() if k.startswith("potential_")}
    return a, potential_from_name(str(cfg["potential"]), **params)


# ------------------------------------------------------------------ output

def fmt(v):
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


class Output:
    def __init__(self, path, command, cfg):
        self.fh = open(path, "w", newline="") if path and path != "-" else sys.stdout
        self.fh.write(f"# cocycle-lab {__version__} {command}\n")
        for k in sorted(cfg):
            self.fh.write(f"# {k} = {cfg[k]}\n")
        self.csv = csv.writer(self.fh, lineterminator="\n")

    def row(self, values):
        self.csv.writerow([fmt(v) for v in values])

    def line(self, text):
        self.fh.write(text + "\n")

    def close(self):
        if self.fh is not sys.stdout:
            self.fh.close()
        else:
            self.fh.flush()


def pmap(fn, items, jobs):
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


# -------------------------------------------------------------- subcommands

def cmd_le(cfg, args):
    from .spectral import finite_le_many
    lam = need(cfg, "lam")
    Es = energies(cfg)
    a, v = family(cfg)
    n = need(cfg, "n", int)
    xg = need(cfg, "x_grid", int)
    refine = args.refine or bool(cfg.get("refine", False))
    half = max(1, n // 2)

    def one(E):
        c = QpCocycle.schrodinger(a, float(E), lam, v)
        L = finite_le_many(c, [half, n] if refine else [n], xg)
        return (E, n, L[n]) + ((2 * L[n] - L[half],) if refine else ())

    rows = pmap(one, Es, jobs_from(args))
    out = Output(args.out, "le", cfg)
    out.row(["E", "n", "L_n"] + (["L_refined"] if refine else []))
    for r in rows:
        out.row(r)
    out.close()


def cmd_ids(cfg, args):
    from .spectral import ids_dirichlet
    lam = need(cfg, "lam")
    Es = energies(cfg)
    a, v = family(cfg)
    n = need(cfg, "n", int)
    x = float(cfg.get("x", 0.0))
    c = QpCocycle.schrodinger(a, 0.0, lam, v)
    N = np.atleast_1d(ids_dirichlet(c, np.sort(Es), n, x))
    out = Output(args.out, "ids", cfg)
    out.row(["E", "n", "N_n"])
    for E, val in zip(np.sort(Es), N):
        out.row([E, n, float(val)])
    out.close()


def cmd_scan(cfg, args):
    from .spectral import positivity_scan, spectrum_interval
    lam = need(cfg, "lam")
    a, v = family(cfg)
    n = need(cfg, "n", int)
    xg = need(cfg, "x_grid", int)
    lo, hi = spectrum_interval(v, lam)
    Es = np.linspace(lo, hi, int(cfg.get("E_count", 200)))
    ids_n = int(cfg["ids_n"]) if "ids_n" in cfg else None
    res = positivity_scan(v, lam, a, Es, n, xg, jobs=jobs_from(args), ids_n=ids_n)
    out = Output(args.out, "scan", cfg)
    out.row(["E", "n", "L_n", "L_refined", "N_n", "ratio"])
    for s in res["table"]:
        out.row([s.E, s.n, s.L_n, s.L_refined, s.N_n, s.L_refined / math.log(lam)])
    out.line(f"# min_ratio = {res['min_ratio']:.17g}")
    out.close()


def cmd_induct(cfg, args):
    from .harness import run_induction_trace
    need(cfg, "lam")
    need(cfg, "t")
    depth = int(cfg.get("depth", 3))
    path = args.out or cfg.get("trace", "induction_trace.jsonl")
    run_induction_trace(cfg, depth, path)
    if args.out is None:
        print(path)


def cmd_ldt(cfg, args):
    from .spectral import ldt_profile, le_refined
    lam = need(cfg, "lam")
    E = float(energies(cfg)[0])
    a, v = family(cfg)
    xg = need(cfg, "x_grid", int)
    iv = cfg.get("i_values", "100,1000,10000")
    i_values = [int(s) for s in str(iv).split(",")]
    c = QpCocycle.schrodinger(a, E, lam, v)
    L_ref = float(cfg["L_ref"]) if "L_ref" in cfg else le_refined(c, 256, xg)
    eps_log = float(cfg.get("eps_frac", 0.05)) * math.log(lam)
    reps = ldt_profile(c, i_values, eps_log, xg, L_ref)
    out = Output(args.out, "ldt", cfg)
    out.line(f"# L_ref = {L_ref:.17g}")
    for r in reps:
        out.line(json.dumps({"i": r.i, "epsilon": r.epsilon, "measure_hat": r.measure_hat,
                             "bound": r.bound}, sort_keys=True))
    out.close()


def cmd_lemmas(cfg, args):
    from .harness import REGISTRY, run_lemma_suite
    if args.action == "list":
        out = Output(args.out, "lemmas list", {})
        for k in sorted(REGISTRY):
            out.line(f"{k}\t{REGISTRY[k].anchor}")
        out.close()
        return
    if not args.suite:
        raise ConfigError("lemmas run needs a suite id")
    ids = sorted(REGISTRY) if args.suite == "all" else [args.suite]
    reports = [run_lemma_suite(i, cfg) for i in ids]
    out = Output(args.out, "lemmas run", cfg)
    for r in reports:
        out.line(r.to_json())
    out.close()


def cmd_szego(cfg, args):
    from .spectral import finite_le_many
    lam = need(cfg, "lam")
    a, _ = family(cfg)
    n = need(cfg, "n", int)
    xg = need(cfg, "x_grid", int)
    eps = float(cfg.get("eps", 0.1))
    ts = energies({"E": cfg["t"]}) if "t" in cfg else np.array([0.0])
    k = int(cfg.get("k", 0))
    half = max(1, n // 2)
    bound = -0.5 * (1 - eps) * math.log(1 - lam)

    def one(t):
        c = QpCocycle.szego(a, lam, k=k, t=float(t))
        L = finite_le_many(c, [half, n], xg)
        return t, n, L[n], 2 * L[n] - L[half], bound

    rows = pmap(one, ts, jobs_from(args))
    out = Output(args.out, "szego", cfg)
    out.row(["t", "n", "L_n", "L_refined", "bound"])
    for r in rows:
        out.row(r)
    out.close()


def cmd_thouless(cfg, args):
    from .spectral import dirichlet_eigs, finite_le, thouless_le
    lam = need(cfg, "lam")
    Es = energies(cfg)
    a, v = family(cfg)
    n = need(cfg, "n", int)
    xg = need(cfg, "x_grid", int)
    x = float(cfg.get("x", 0.0))
    eigs = dirichlet_eigs(QpCocycle.schrodinger(a, 0.0, lam, v), n, x)

    def one(E):
        return E, n, thouless_le(eigs, float(E)), finite_le(QpCocycle.schrodinger(a, float(E), lam, v), n, xg)

    rows = pmap(one, Es, jobs_from(args))
    out = Output(args.out, "thouless", cfg)
    out.row(["E", "n", "L_thouless", "L_n"])
    for r in rows:
        out.row(r)
    out.close()


COMMANDS = {
    "le": cmd_le, "ids": cmd_ids, "scan": cmd_scan, "induct": cmd_induct, "ldt": cmd_ldt,
    "lemmas": cmd_lemmas, "szego": cmd_szego, "thouless": cmd_thouless,
}


def make_parser():
    p = argparse.ArgumentParser(prog="cocycle-lab", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=f"cocycle-lab {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value file")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one key")
    common.add_argument("--jobs", type=int, help="worker threads (default: COCYCLE_LAB_JOBS or 1)")
    common.add_argument("--out", help="output path (default: stdout)")
    sub = p.add_subparsers(dest="command", required=True)
    le = sub.add_parser("le", parents=[common], help="finite-scale Lyapunov exponents")
    le.add_argument("--refine", action="store_true", help="add the 2 L_n - L_{n/2} column")
    sub.add_parser("ids", parents=[common], help="Dirichlet IDS by Sturm counts")
    sub.add_parser("scan", parents=[common], help="positivity scan over the spectrum interval")
    sub.add_parser("induct", parents=[common], help="run the multiscale induction, write a trace")
    sub.add_parser("ldt", parents=[common], help="large-deviation measurements")
    lem = sub.add_parser("lemmas", parents=[common], help="lemma verification suites")
    lem.add_argument("action", choices=("list", "run"))
    lem.add_argument("suite", nargs="?")
    sub.add_parser("szego", parents=[common], help="Lyapunov exponent of the Szego cocycle")
    sub.add_parser("thouless", parents=[common], help="Thouless sum vs transfer-matrix exponent")
    return p


def main(argv=None):
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        cfg = build_config(args)
        COMMANDS[args.command](cfg, args)
    except CocycleLabError as exc:
        print(f"cocycle-lab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"cocycle-lab: invalid input: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
