"""Train both priors on the same small task and compare their trajectories.

Seed-matched runs consume identical batch orders, so any gap in the curves
comes from the objective, not the data. Uses a reduced setup (30 epochs,
small net) to finish in well under a minute; the benchmark defaults live in
TrainConfig.
"""

import tempfile

import numpy as np

from priorbench import (EmbeddingSpace, EvalSettings, SeededRng, TrainConfig,
                        ema_smooth, generate_dataset, make_task, train)

specs = make_task(4, 4, seed=11)
space = EmbeddingSpace.for_task(specs)
print("task: %d conditions in %d dims, 2 mixture components each" % (
    len(specs), specs[0].dim))

fast_eval = EvalSettings(n_generate=256, diffusion_steps=20, flow_steps=8,
                         diversity_pairs=100, multimodality_reps=8)

records = {}
for objective in ("flow", "diffusion"):
    config = TrainConfig(objective=objective, epochs=30, batch_size=40,
                         lr=1e-3, seed=7, hidden=64, d_time=8,
                         schedule_steps=400, eval=fast_eval)
    dataset = generate_dataset(specs, 200, seed=7)  # fresh: clean access log
    with tempfile.TemporaryDirectory() as run_dir:
        records[objective] = train(specs, dataset, config, run_dir, space=space)

print("\nepoch    flow loss   flow FID    diff loss   diff FID")
flow, diff = records["flow"], records["diffusion"]
for e in range(0, 30, 5):
    print("%5d    %9.4f  %9.4f    %9.4f  %9.4f" % (
        e + 1, flow.epoch_losses[e], flow.val_metrics[e].fid,
        diff.epoch_losses[e], diff.val_metrics[e].fid))

for objective, record in records.items():
    curve = ema_smooth([m.fid for m in record.val_metrics], span=5)
    # first epoch inside 1.1x of the final smoothed value = rough convergence
    reached = int(np.argmax(curve <= 1.1 * curve[-1])) + 1
    peak = record.peak_test
    print("\n%s: peak epoch %d (test FID %.4f), near-final val FID from epoch %d"
          % (objective, record.peak_epoch, peak.fid, reached))
    print("   peak test metrics: R@1 %.3f  R@2 %.3f  R@3 %.3f  "
          "MMDist %.3f  Div %.3f  MMod %.3f" % (
              peak.r1, peak.r2, peak.r3, peak.matching_score,
              peak.diversity, peak.multimodality))
