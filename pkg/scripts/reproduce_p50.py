"""Reproduce the p = 50 optimum in symmetric mode.

Long running (several minutes on one core). Not part of the test suite.

    python3 scripts/reproduce_p50.py [--n-nodes 1200] [--p 50]
"""

import argparse
import sys
import time

from steklov.optimizer import ProblemSpec, interp_seed, optimize, verify_conjecture

REFERENCE = {50: 59.41361758262}
TOL = 1e-2


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p", type=int, default=50)
    ap.add_argument("--n-nodes", type=int, default=1200)
    ap.add_argument("--max-iters", type=int, default=200)
    args = ap.parse_args(argv)

    spec = ProblemSpec(p=args.p, mode="symmetric", n_nodes=args.n_nodes, max_iters=args.max_iters)
    t0 = time.perf_counter()
    run = optimize(spec, interp_seed(args.p))
    elapsed = time.perf_counter() - t0
    report = verify_conjecture(run)
    print(f"p={args.p} n={args.n_nodes} Lambda_p={run.value:.11f} status={run.status} "
          f"cluster={report['cluster_p']} gap={report['gap']:.4f} time={elapsed:.1f}s")
    ref = REFERENCE.get(args.p)
    if ref is None:
        return 0
    err = abs(run.value - ref)
    ok = err < TOL
    print(f"reference {ref:.11f} |error| {err:.2e} {'PASS' if ok else 'FAIL'} (tol {TOL:g})")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
