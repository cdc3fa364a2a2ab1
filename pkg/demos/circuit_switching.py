#!/usr/bin/env python3
"""Two-mode RC circuit: charge-sharing switches and the resulting MLF trace.

The circuit's two modes share the dynamics w2' + w2 = 0; switching into
mode 1 parallels the capacitors, halving both voltages, so the quadratic
value w2^2 drops by a factor 4 at every 2->1 event.
"""

import numpy as np

from sldstab import audit_mlf, find_mlf, simulate
from sldstab.fixtures import elcirc
from sldstab.sim import SwitchingSignal

model = elcirc()
cert = find_mlf(model)
print(f"certificate found: {cert.feasible} "
      f"(kernels {[np.asarray(K).tolist() for K in cert.kernels]})")

signal = SwitchingSignal(1, ((1.0, 2), (2.0, 1), (3.0, 2), (4.0, 1)))
trace = simulate(model, signal, np.array([1.0]), 8.0, 0.01, certificate=cert)

for ev in trace.events:
    ratio = ev["v_plus"] / ev["v_minus"] if ev["v_minus"] else float("nan")
    print(f"  t={ev['time']:.1f}  {ev['from']}->{ev['to']}  "
          f"V-/V+ = {ev['v_minus']:.4e} / {ev['v_plus']:.4e}  (ratio {ratio:.3f})")

report = audit_mlf(trace, cert)
print(f"audit: ok={report['ok']}  final |w| = {trace.w_norms()[-1]:.2e}")
