import os
import time

from qrecone.barriers import EpiQRE, barrier_eval
from qrecone.certify import random_interior_point
from qrecone.pinching import pinching_problem, pinching_state
from qrecone.ipm import solve

import numpy as np

SIZES = [int(s) for s in os.environ.get("BENCH_SIZES", "2,3,4").split(",")]
EPS = float(os.environ.get("BENCH_EPS", "1e-6"))
CALLS = int(os.environ.get("BENCH_CALLS", "50"))

rng = np.random.default_rng(0)
for n in SIZES:
    cone = EpiQRE(n)
    x = random_interior_point(cone, rng)
    start = time.time()
    for _ in range(CALLS):
        barrier_eval(cone, x, 2)
    per_call = (time.time() - start) / CALLS

    start = time.time()
    result = solve(pinching_problem(pinching_state(n)), eps=EPS)
    elapsed = time.time() - start
    print(
        f"n={n} hessian={per_call * 1e3:.2f}ms solve={elapsed:.3f}s "
        f"iterations={result.iterations} newton={result.newton_steps} status={result.status}"
    )
