"""Compare the compiled kernels with the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Kernel timings call both modules directly; the end-to-end rows run the static
learner and the dynamic meta-algorithm in a subprocess per backend, selected
through ``QBOL_PURE_PYTHON``.
"""
from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from qbol import _pykernels

try:
    from qbol import _kernels
except ImportError:  # extension not built
    _kernels = None

END_TO_END = r"""
import json, time, numpy as np
from qbol._backend import NAME
from qbol.core import QuadBound
from qbol.qb_learner import QBConfig, qb_init, qb_step
from qbol.dynamic import GridConfig, dyn_init, dyn_round
from qbol.bench.streams import RegressionStream
rng = np.random.default_rng(0)
cfg = QBConfig(eps=1.0, G_max=1.0, L_max=1.0, dim=5)
s = qb_init(cfg)
G = 0.2 * rng.standard_normal((3000, 5))
t0 = time.perf_counter()
for g in G:
    s = qb_step(s, g, 1.0, 1.0)
qb = (time.perf_counter() - t0) / len(G)
st = RegressionStream(dim=3, T=500, seed=0)
d = dyn_init(GridConfig(eps=1.0, G_max=st.G_max, L_max=st.L_max, T=500), 3)
t0 = time.perf_counter()
for t in range(500):
    f = st.loss(t)
    dyn_round(d, f, QuadBound(0.0, f.smoothness))
dyn = (time.perf_counter() - t0) / 500
print(json.dumps({"backend": NAME, "qb_step_us": qb * 1e6, "dyn_round_us": dyn * 1e6, "experts": int(d.n_experts)}))
"""


def kernel_cases():
    rng = np.random.default_rng(1)
    link = [(3.0, 20.0, 0.05, 1.0, 4.0, float(r), np.inf) for r in rng.uniform(0.5, 200.0, 200)]
    ent = []
    for n in (10, 100, 600):
        mu = 10.0 ** rng.uniform(-3, 3, n)
        ell = rng.uniform(-1, 1, n) / mu
        p = rng.dirichlet(np.ones(n))
        ent.append((n, np.log(p), ell + mu * ell**2, mu, 4.5))
    return link, ent


def time_kernels(mod, repeat):
    link, ent = kernel_cases()
    out = {}
    t = min(timeit.repeat(lambda: [mod.qb_link_inverse(*a) for a in link], number=1, repeat=repeat))
    out["link_inverse_us"] = t / len(link) * 1e6
    for n, lp, c, mu, k in ent:
        t = min(timeit.repeat(lambda: mod.entropy_argmin(lp, c, mu, k), number=20, repeat=repeat))
        out[f"entropy_argmin_n{n}_us"] = t / 20 * 1e6
    return out


def end_to_end(pure: bool):
    env = dict(os.environ, QBOL_PURE_PYTHON="1" if pure else "0")
    res = subprocess.run([sys.executable, "-c", END_TO_END], env=env, capture_output=True, text=True, check=True)
    return json.loads(res.stdout)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    py = time_kernels(_pykernels, args.repeat)
    cy = time_kernels(_kernels, args.repeat) if _kernels is not None else None
    print(f"{'kernel':28s} {'python':>12s} {'cython':>12s} {'speedup':>8s}")
    for key, v in py.items():
        c = cy[key] if cy else float("nan")
        print(f"{key:28s} {v:12.2f} {c:12.2f} {v / c:8.1f}x")

    e_py = end_to_end(True)
    rows = [e_py]
    if _kernels is not None:
        rows.append(end_to_end(False))
    print()
    print(f"{'end-to-end (us/round)':28s} " + " ".join(f"{r['backend']:>12s}" for r in rows))
    for key in ("qb_step_us", "dyn_round_us"):
        print(f"{key:28s} " + " ".join(f"{r[key]:12.2f}" for r in rows))
    print(f"(dynamic grid size: {e_py['experts']} experts)")


if __name__ == "__main__":
    main()
