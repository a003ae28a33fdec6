"""Seeded lemma-verification suites and the induction trace driver.

Every suite draws one RNG stream per trial from a SeedSequence spawned off
the configured seed, so the worst trial can be replayed on its own.
"""
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from . import sl2core
from .arithmetic import parse_alpha
from .cocycle import QpCocycle, potential_from_name
from .directions import (almost_invariance_residuals, concat_floor_check,
                         ess_change_predict)
from .errors import CapExceeded, ClassificationLost, UnknownSuite
from .induction import (InductionConfig, run_induction, scan_resonant_t,
                        starting_step, type3_bifurcation)
from .sl2core import PI, PolarForm, wrap_signed
from .spectral import avalanche_check, le_refined


@dataclass(frozen=True)
class LemmaReport:
    lemma_id: str
    trials: int
    worst_ratio: float
    passed: bool
    seed: int
    worst_trial: int = -1
    details: dict = field(default_factory=dict)

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True, default=_plain)


def _plain(o):
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


def trial_rngs(seed, trials):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(trials)]


def _loguniform(rng, lo, hi):
    return math.exp(rng.uniform(math.log(lo), math.log(hi)))


# ------------------------------------------------------------------ suites

def _ess_change(cfg):
    trials, seed = cfg.get("trials", 10_000), cfg.get("seed", 0)
    lo, hi = cfg.get("norm_lo", 1e2), cfg.get("norm_hi", 1e6)
    bound = cfg.get("ratio_bound", 50.0)
    worst, where = 1.0, -1
    per_branch = {}
    for bi, branch in enumerate(("e2>e1", "e1>e2", "equal")):
        bw = 1.0
        for j, rng in enumerate(trial_rngs(seed + bi, trials)):
            e1 = _loguniform(rng, lo, hi)
            e2 = _loguniform(rng, lo, hi)
            if branch == "equal":
                e2 = e1
            elif (e2 > e1) != (branch == "e2>e1"):
                e1, e2 = e2, e1
            th = rng.uniform(0.01, PI - 0.01)
            E = np.diag([e2, 1 / e2]) @ sl2core.rot(th) @ np.diag([e1, 1 / e1])
            p = sl2core.polar_decompose(E)
            pred = ess_change_predict(e1, e2, th)
            for exact, guess in ((p.s, pred["s_pred"]), (p.u, pred["u_pred"])):
                a, b = abs(wrap_signed(exact)), abs(wrap_signed(guess))
                if a == 0.0 and b == 0.0:
                    continue
                r = math.inf if min(a, b) == 0 else max(a / b, b / a)
                if r > bw:
                    bw = r
                if r > worst:
                    worst, where = r, bi * trials + j
        per_branch[branch] = bw
    return trials * 3, worst, worst <= bound, where, {"per_branch": per_branch, "bound": bound}


def _concat_floor(cfg):
    trials, seed = cfg.get("trials", 100), cfg.get("seed", 0)
    n, eta = cfg.get("n", 20), cfg.get("eta", 0.05)
    lo, hi = cfg.get("norm_lo", 1e2), cfg.get("norm_hi", 1e4)
    gap_lo = cfg.get("gap_lo", 0.1)
    held, worst, where, needs = 0, 0.0, -1, []
    for j, rng in enumerate(trial_rngs(seed, trials)):
        seq, u_prev = [], None
        for _ in range(n):
            u = rng.uniform(0, PI)
            s = rng.uniform(0, PI) if u_prev is None else \
                sl2core.wrap(u_prev + rng.choice((-1, 1)) * rng.uniform(gap_lo, 0.5 * PI))
            seq.append(PolarForm(math.log(_loguniform(rng, lo, hi)), u, s))
            u_prev = u
        rep = concat_floor_check(seq, eta=eta)
        held += rep.holds
        needs.append(rep.eta_needed)
        if rep.eta_needed / eta > worst:
            worst, where = rep.eta_needed / eta, j
    return trials, worst, held == trials, where, {
        "held": held, "eta": eta, "eta_needed_max": float(max(needs)),
        "eta_needed_mean": float(np.mean(needs))}


def _type3_scaling(cfg):
    ls = cfg.get("ls", (1e3, 1e4, 1e5))
    d0 = []
    monotone = True
    for l in ls:
        ds = np.array([0.0, 0.5, 1.0, 1.5, 2.5, 5.0, 10.0]) / l
        out = type3_bifurcation(lambda x: x, lambda x: -x, l, ds, interval=(-0.1, 0.1))
        d0.append(out["d0_hat"])
        monotone &= bool(np.all(np.diff(out["zero_counts"]) >= 0)) and out["count_at_d0"] == 1
    slope = float(np.polyfit(np.log(ls), np.log(d0), 1)[0])
    ratio = abs(slope + 1.0) / 0.1
    return len(ls), ratio, ratio <= 1.0 and monotone, -1, {
        "slope": slope, "d0_hat": [float(x) for x in d0], "d0_times_l_over_2": [float(x * l / 2) for x, l in zip(d0, ls)],
        "monotone_counts": monotone}


def _random_sl2(rng, norm):
    return sl2core.rot(rng.uniform(0, PI)) @ np.diag([norm, 1 / norm]) @ sl2core.rot(rng.uniform(0, PI))


def _almost_invariance(cfg):
    trials, seed = cfg.get("trials", 1000), cfg.get("seed", 0)
    every_id = cfg.get("identity_every", 100)
    bound = cfg.get("ratio_bound", 50.0)
    worst, where, trivial_max = 0.0, -1, 0.0
    for j, rng in enumerate(trial_rngs(seed, trials)):
        n1 = _loguniform(rng, 10.0, 100.0)
        n2 = n1 * n1 * _loguniform(rng, 1.0, 100.0)
        E2 = _random_sl2(rng, n2)
        if j % every_id == 0:
            res = almost_invariance_residuals(np.eye(2), E2)
            trivial_max = max(trivial_max, res["r1"], res["r2"], res["r3"], res["r4"])
            continue
        res = almost_invariance_residuals(_random_sl2(rng, n1), E2)
        r = max(res[f"r{i}"] / res[f"b{i}"] for i in range(1, 5))
        if r > worst:
            worst, where = r, j
    return trials, worst, worst <= bound and trivial_max == 0.0, where, {
        "identity_residual_max": trivial_max, "bound": bound}


def _orbit_relation(cfg):
    alpha = float(parse_alpha(cfg.get("alpha", "golden")))
    lam = cfg.get("lam", 1e3)
    stride = cfg.get("stride", 4)
    const = cfg.get("const", 10.0)
    floor = cfg.get("floor", 1e-9)
    found = scan_resonant_t(alpha, lam)[::stride]
    worst, where, used = 0.0, -1, 0
    for j, (t, k) in enumerate(found):
        st = starting_step(QpCocycle.reduced(alpha, t, lam))
        rel = st.orbit_relation
        if rel is None:
            continue
        used += 1
        allow = const * math.exp(rel["log_bound"]) + floor
        r = max(rel["d1"], rel["d2"]) / allow
        if r > worst:
            worst, where = r, j
    return used, worst, used > 0 and worst <= 1.0, where, {
        "scanned": len(found), "const": const, "floor": floor}


def _avalanche(cfg):
    trials, seed = cfg.get("trials", 200), cfg.get("seed", 0)
    n, mu = cfg.get("n", 50), cfg.get("mu", 1e4)
    bound = cfg.get("ratio_bound", 10.0)
    worst, where, used = 0.0, -1, 0
    for j, rng in enumerate(trial_rngs(seed, trials)):
        mats = [sl2core.rot(rng.uniform(-0.3, 0.3)) @ np.diag([s, 1 / s])
                for s in (mu * _loguniform(rng, 1.0, 10.0) for _ in range(n))]
        rep = avalanche_check(mats, mu)
        if not rep["cond_ok"]:
            continue
        used += 1
        r = rep["lhs"] / rep["scale"]
        if r > worst:
            worst, where = r, j
    return used, worst, used > 0 and worst <= bound, where, {"n": n, "mu": mu, "bound": bound}


def _refinement(cfg):
    alpha = float(parse_alpha(cfg.get("alpha", "golden")))
    lam = cfg.get("lam", 1e3)
    x_grid = cfg.get("x_grid", 2048)
    Es = cfg.get("energies", tuple(lam * np.array([-0.8, -0.4, 0.0, 0.4, 0.8])))
    ls = cfg.get("ls", (32, 64, 128))
    worst, ok = 0.0, True
    diffs = {}
    for E in Es:
        c = QpCocycle.schrodinger(alpha, float(E), lam)
        vals = [le_refined(c, l, x_grid) for l in ls] + [le_refined(c, 2 * ls[-1], x_grid)]
        d = np.abs(np.diff(vals))
        diffs[float(E)] = d.tolist()
        ok &= bool(np.all(np.diff(d) <= 0))
        worst = max(worst, d[-1] / (1e-2 * math.log(lam)))
    return len(Es), worst, ok and worst < 1.0, -1, {"diffs": diffs}


@dataclass(frozen=True)
class Suite:
    run: object
    anchor: str       # formula the suite instantiates
    default_trials: int


REGISTRY = {
    "ess-change": Suite(_ess_change, r"\tan^{-1}(e_1^2\cot\t)", 10_000),
    "concat-floor": Suite(_concat_floor, r"l_n>\left(\prod^{n-1}_{\ell=0}\l_\ell\right)^{1-\eta}", 100),
    "type3-scaling": Suite(_type3_scaling, r"d_0=\eta_2 l^{-1}", 3),
    "almost-invariance": Suite(_almost_invariance, r"|E_1^{-1}\cdot s(E_2)-s(E)|<C\|E\|^{-2}", 1000),
    "orbit-relation": Suite(_orbit_relation, r"|c_{2,1}+k\a-c'_{2,1}|", 0),
    "avalanche": Suite(_avalanche, r"\le C\frac{n}{\mu}", 200),
    "refinement": Suite(_refinement, r"L(E)+L_n(E)-2L_{2n}(E)", 5),
}


def run_lemma_suite(lemma_id, config=None):
    if lemma_id not in REGISTRY:
        raise UnknownSuite(f"unknown suite {lemma_id!r}; known: {', '.join(sorted(REGISTRY))}")
    cfg = dict(config or {})
    trials, worst, passed, where, details = REGISTRY[lemma_id].run(cfg)
    return LemmaReport(lemma_id, int(trials), float(worst), bool(passed), int(cfg.get("seed", 0)),
                       int(where), details)


# ----------------------------------------------------------- induction trace

def induction_config(cfg):
    keys = {f.name for f in InductionConfig.__dataclass_fields__.values()}
    return InductionConfig(**{k: cfg[k] for k in keys if k in cfg and k != "margins"})


def run_induction_trace(config, depth, path):
    """Run starting_step plus up to depth iterate_steps and write a JSON-lines trace."""
    alpha = float(parse_alpha(config.get("alpha", "golden")))
    v = potential_from_name(config.get("potential", "cos"))
    c = QpCocycle.reduced(alpha, float(config["t"]), float(config["lam"]), v)
    states, stop = run_induction(c, int(depth), induction_config(config))
    with open(path, "w", newline="\n") as fh:
        fh.write(f"# cocycle-lab {__version__} induction trace\n")
        for k in sorted(config):
            fh.write(f"# {k} = {config[k]}\n")
        for st in states:
            fh.write(st.to_json() + "\n")
        if stop is not None:
            fh.write(f"# stopped: {type(stop).__name__}: {stop}\n")
    if isinstance(stop, (ClassificationLost, CapExceeded)):
        raise stop
    return path


def read_trace(path):
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip() and not line.startswith("#")]
