"""Write a trajectory file, read it back, and check the bytes survive.

Run: python3 demos/record_replay.py
"""

import tempfile
from pathlib import Path

import numpy as np

from featcast import (
    DenoiserDims,
    SamplerConfig,
    ToyDenoiser,
    TrajectoryRecorder,
    build_uniform,
    read_trajectory,
    sample,
    write_trajectory,
)

model = ToyDenoiser(7, DenoiserDims(layers=2, tokens=4, channels=8, hidden=16))
rec = TrajectoryRecorder()
out, report = sample(SamplerConfig(total_steps=12), model, build_uniform(12, 3), order_m=2, recorder=rec)
traj = rec.to_trajectory()
print("slots:", [str(s) for s in traj.slots])
print("recorded timesteps (full activations only):", traj.timesteps)

with tempfile.TemporaryDirectory() as d:
    path = Path(d) / "run.tstj"
    write_trajectory(path, *traj)
    back = read_trajectory(path)
    print("file size:", path.stat().st_size, "bytes")
    print("first 16 bytes:", path.read_bytes()[:16].hex(" "))
    print("round trip exact:", np.array_equal(back.tensors, traj.tensors) and back.slots == traj.slots)

print(report.dumps()[:300], "...")
