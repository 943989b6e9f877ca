"""Record branch outputs along a full run and look at their principal components.

Run: python3 demos/feature_pca.py
"""

import numpy as np

from featcast import (
    SamplerConfig,
    TrajectoryMatrix,
    TrajectoryRecorder,
    build_uniform,
    cached_model,
    derivative_trajectory,
    pca_project,
    sample,
)

model = cached_model(42)
rec = TrajectoryRecorder()
sample(SamplerConfig(), model, build_uniform(50, 1), recorder=rec)
traj = rec.to_trajectory()

for name in ("L0.sa", "L4.ca", "L7.mlp"):
    i = [str(s) for s in traj.slots].index(name)
    feats = TrajectoryMatrix(traj.tensors[i].reshape(50, -1), 0, traj.timesteps)
    for order in (0, 1, 2):
        res = pca_project(derivative_trajectory(feats, order), 3)
        share = res.explained_variance / res.total_variance
        print(f"{name:7} order {order}: top-3 variance share {np.round(share, 3)}")

# A smooth path in PC space: successive steps move by small, similar amounts.
i = [str(s) for s in traj.slots].index("L4.mlp")
p = pca_project(TrajectoryMatrix(traj.tensors[i].reshape(50, -1)), 2).projections
steps = np.linalg.norm(np.diff(p, axis=0), axis=1)
print("L4.mlp step lengths in PC1-2, first ten:", np.round(steps[:10], 4))
