"""Latency measurement and the efficiency-quality trade-off.

Times both samplers across matched step counts on an untrained net (latency
is architecture-bound, not weight-bound), fits the per-step cost, and writes
a pareto.csv plus an SVG scatter for a quickly-trained flow prior.
"""

import os
import tempfile

import numpy as np

from priorbench import (EmbeddingSpace, EvalSettings, LatencyProtocol,
                        ParetoPoint, PriorNetwork, SeededRng, TrainConfig,
                        build_scaled_linear_schedule, generate_dataset,
                        load_checkpoint, make_sampler_invocation, make_task,
                        measure_latency, pareto_sweep, per_step_cost, train)

specs = make_task(4, 4, seed=11)
space = EmbeddingSpace.for_task(specs)
schedule = build_scaled_linear_schedule(400)
labels = np.resize(np.arange(len(specs)), 32)

# --- per-step cost of each sampler ------------------------------------------
net = PriorNetwork.initialized(4, 4, SeededRng(0), hidden=64, d_time=8)
protocol = LatencyProtocol(warmup=2, timed=8)
points = []
for objective in ("diffusion", "flow"):
    for steps in range(4, 16):
        invoke = make_sampler_invocation(net, objective, steps, labels, space,
                                         SeededRng(1).derive("lat", steps),
                                         schedule=schedule)
        res = measure_latency(invoke, protocol)
        points.append((objective, steps, res.mean_ms))
        for warning in res.warnings:
            print("note:", warning)

print("steps   diffusion ms   flow ms")
by_obj = {"diffusion": {}, "flow": {}}
for objective, steps, ms in points:
    by_obj[objective][steps] = ms
for steps in range(4, 16):
    print("%5d   %12.3f   %7.3f" % (steps, by_obj["diffusion"][steps],
                                    by_obj["flow"][steps]))

# fit ms-per-step slopes; ancestral sampling does extra posterior work per step
slope_input = [
    ParetoPoint(objective=o, steps=s, latency_ms=ms, metrics=None)
    for o, s, ms in points]
slopes = per_step_cost(slope_input)
print("fitted per-step cost: diffusion %.4f ms, flow %.4f ms" % (
    slopes["diffusion"], slopes["flow"]))

# --- full sweep on a trained checkpoint --------------------------------------
eval_settings = EvalSettings(n_generate=256, diffusion_steps=20, flow_steps=8,
                             diversity_pairs=100, multimodality_reps=8)
config = TrainConfig(objective="flow", epochs=20, batch_size=40, lr=1e-3,
                     seed=7, hidden=64, d_time=8, schedule_steps=400,
                     eval=eval_settings)
dataset = generate_dataset(specs, 200, seed=7)
with tempfile.TemporaryDirectory() as run_dir:
    record = train(specs, dataset, config, run_dir, space=space)
    trained, _ = load_checkpoint(record.checkpoint_paths[record.peak_epoch - 1])

test_x, test_labels = generate_dataset(specs, 200, seed=7).split("test")
out_dir = os.path.join(tempfile.gettempdir(), "priorbench-demo")
os.makedirs(out_dir, exist_ok=True)
sweep = pareto_sweep(trained, "flow", range(2, 16), space, test_x, test_labels,
                     SeededRng(5).derive("pareto"),
                     protocol=LatencyProtocol(batch_size=32, warmup=2, timed=5),
                     schedule=schedule, settings=eval_settings,
                     csv_path=os.path.join(out_dir, "pareto.csv"),
                     svg_path=os.path.join(out_dir, "pareto.svg"))
print("\nsweep points:")
for p in sweep:
    print("  steps %2d  %7.3f ms  FID %.4f" % (p.steps, p.latency_ms, p.metrics.fid))
print("wrote %s and %s" % (os.path.join(out_dir, "pareto.csv"),
                           os.path.join(out_dir, "pareto.svg")))
