"""Run the seeded lemma suites and print one summary line each.

Every suite draws its trials from a fixed seed, so the numbers below are
reproducible run to run.  The worst ratio column is the largest measured
quantity divided by the bound it is checked against.

    python demos/lemma_suites.py           # reduced trial counts
    python demos/lemma_suites.py --full    # the acceptance-size runs
"""
import sys

from cocycle_lab.harness import REGISTRY, run_lemma_suite

full = "--full" in sys.argv
small = {
    "avalanche": {"trials": 40},
    "ess-change": {"trials": 500},
    "almost-invariance": {"trials": 200},
    "concat-floor": {"trials": 20},
}

print(f"{'suite':<20} {'trials':>7} {'worst ratio':>12}  result")
for name in REGISTRY:
    params = {} if full else small.get(name, {})
    try:
        rep = run_lemma_suite(name, params)
    except Exception as exc:               # keep going; show why a suite could not run
        print(f"{name:<20} {'-':>7} {'-':>12}  error: {exc}")
        continue
    print(f"{name:<20} {rep.trials:>7} {rep.worst_ratio:>12.4g}  {'pass' if rep.passed else 'FAIL'}")
