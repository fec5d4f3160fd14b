"""The Atiyah bundle F_2: approximate solutions without a limit.

F_2 is the non-split extension of the trivial bundle by itself.  It is
semistable but not polystable, so Hermitian-Einstein metrics exist only in
the approximate sense.  Starting from ``M(y)^* M(y)`` with ``M = I - y N``,
the flow keeps the metric's shape and only rescales the off-diagonal
coupling.  The deviation decays like ``1 / (2 (1 + t))`` while the smallest
eigenvalue of ``h_0^{-1} h`` decays like ``(1 + t)^{-1/2}``.  The curvature
goes to zero only because the metric degenerates.

    python demos/03_atiyah_degeneration.py [N]
"""

import sys

import numpy as np

from flowlab import FlowConfig, atiyah_F2, canonical_metric, classify_limit, make_torus, run

N = int(sys.argv[1]) if len(sys.argv) > 1 else 32
h0 = canonical_metric(atiyah_F2(), make_torus(1j, N))
h, diag = run(h0, 0.0, FlowConfig(cfl=0.5, max_steps=10 ** 6, epsilon_target=0.019,
                                  record_every=N * N // 2))

print(f"{'t':>8} {'sup|K|':>10} {'1/(2(1+t))':>11} {'min eig':>9} {'(1+t)^-1/2':>11} {'cond':>8}")
for rec in diag.records[:: max(1, len(diag) // 12)] + [diag.records[-1]]:
    t = rec["time"]
    print(f"{t:8.3f} {rec['sup_dev']:10.5f} {0.5 / (1 + t):11.5f} {rec['min_eig']:9.5f} "
          f"{(1 + t) ** -0.5:11.5f} {rec['cond']:8.2f}")
print(f"classification with epsilon 0.05: {classify_limit(diag, 0.0, 0.05)!r}; "
      f"det drift {np.max(diag.column('det_drift')):.1e}; {diag.wall_time:.1f} s")
