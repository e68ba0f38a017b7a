"""Timing comparison of the two alignment-climbing kernels.

Both kernels implement the same deterministic algorithm, so besides the
wall-clock numbers the script asserts identical mappings and scores on
every problem.

Usage: python3 benchmarks/bench_match.py [--pairs N] [--nodes N]
       [--restarts N] [--seed N]
"""

import argparse
import random
import sys
import time
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))

from dagrammar import _climb_py
from dagrammar.evaluate import _Problem
from util import random_graph

try:
    from dagrammar import _climb_cy
except ImportError:
    _climb_cy = None


def run(kernel, problems, inits):
    start = time.perf_counter()
    outcomes = []
    for prob, prob_inits in zip(problems, inits):
        best, best_mapping = -1, None
        for init in prob_inits:
            mapping, score = kernel.climb(list(init), prob.n_gold,
                                          prob.unary, prob.pi1, prob.pi2,
                                          prob.pj1, prob.pj2)
            if score > best:
                best, best_mapping = score, mapping
        outcomes.append((best, best_mapping))
    return time.perf_counter() - start, outcomes


def main(argv=None):
    parser = argparse.ArgumentParser(
        description="compare the compiled and pure-Python climb kernels")
    parser.add_argument("--pairs", type=int, default=60)
    parser.add_argument("--nodes", type=int, default=14)
    parser.add_argument("--restarts", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    rng = random.Random(args.seed)
    problems, inits = [], []
    for _ in range(args.pairs):
        prob = _Problem(random_graph(rng, max_nodes=args.nodes),
                        random_graph(rng, max_nodes=args.nodes))
        problems.append(prob)
        prob_inits = [prob.informed_init()]
        prob_inits.extend(prob.random_init(rng)
                          for _ in range(args.restarts - 1))
        inits.append(prob_inits)

    pure_time, pure_out = run(_climb_py, problems, inits)
    print("pure-python: %7.3fs  (%d pairs x %d restarts, graphs <= %d nodes)"
          % (pure_time, args.pairs, args.restarts, args.nodes))
    if _climb_cy is None:
        print("compiled kernel not built; install the package first")
        return
    compiled_time, compiled_out = run(_climb_cy, problems, inits)
    print("compiled:    %7.3fs" % compiled_time)
    assert compiled_out == pure_out, "kernels disagree"
    print("identical mappings and scores on all pairs; speedup %.1fx"
          % (pure_time / compiled_time))


if __name__ == "__main__":
    main()
