"""Compare the two observation models: independent dimensions vs joint
covariance.

Both engines see the same 4-d stream. The factorized model sums
per-dimension Student-t log predictives and updates a rectangular array of
Normal-Gamma statistics in one vectorized sweep; the joint model carries a
Normal-Inverse-Wishart state per run-length hypothesis and refactorizes
its scale matrix every step. On disentangled (independent) dimensions the
two posteriors agree closely while the joint model costs an order of
magnitude more per step.

Run from the repository root:  python demos/02_factorized_vs_joint.py
"""

import numpy as np

from streamcpd import (
    BocdEngine,
    FactorizedModel,
    FixedSegmentLength,
    HazardSpec,
    MultivariateModel,
    NiwParams,
    NormalGammaParams,
    SyntheticSpec,
    generate,
    run_cost_benchmark,
)

labeled = generate(
    SyntheticSpec(d=4, segment_count=4, length_law=FixedSegmentLength(120), mean_shift=5.0, seed=3)
)
stream = labeled.stream
print(f"stream: {len(stream)} observations, d=4, truth at {list(labeled.truth.times)}")

factorized = BocdEngine(
    FactorizedModel(4, NormalGammaParams(0.0, 1.0, 0.5, 0.5)),
    HazardSpec(100.0),
    truncation=500,
)
joint = BocdEngine(
    MultivariateModel(NiwParams(np.zeros(4), 1.0, 5.0, np.eye(4))),
    HazardSpec(100.0),
    truncation=500,
)

fact_run = factorized.run(stream)
joint_run = joint.run(stream)
print(f"factorized detections: {[d.located_at for d in fact_run.detections]}")
print(f"joint detections:      {[d.located_at for d in joint_run.detections]}")

map_fact = int(np.argmax(factorized.posterior.log_probs))
map_joint = int(np.argmax(joint.posterior.log_probs))
print(f"final MAP run length: factorized={map_fact}, joint={map_joint}")

print("\ntiming the step loops (this takes a minute or two):")
for row in run_cost_benchmark(d=4, t_values=(1000, 2000), truncation=500, seed=0):
    print(
        f"  T={row.T}: factorized {row.factorized_seconds:.2f}s, "
        f"joint {row.multivariate_seconds:.2f}s  ->  {row.ratio:.0f}x"
    )
print(
    "\nThe joint model pays one Cholesky factorization per surviving"
    "\nhypothesis per step; with independent dimensions it buys nothing."
)
