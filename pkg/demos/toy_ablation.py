"""Interval N x order O sweep on the toy denoiser.

Divergence is the l2 distance of the final sample from the all-full run.

Run: python3 demos/toy_ablation.py
"""

from featcast import SamplerConfig, cached_model, divergence_report, plain_sample, run_cell

config = SamplerConfig()
model = cached_model(42)
ref = plain_sample(config, model)

print("N " + "".join(f"{'O=' + str(o):>11}" for o in range(5)) + "  speedup(O=2)")
for n in range(1, 8):
    row, speed = [], None
    for o in range(5):
        out, rep = run_cell(n, o, config, model)
        row.append(divergence_report(out, ref)["l2"])
        if o == 2:
            speed = rep.speedup
    print(f"{n}  " + "".join(f"{d:10.5f} " for d in row) + f"  {speed:.2f}x")
