# Attention and sentiment features
# ================================
#
# Search-volume providers return each download window rescaled to max = 100,
# so long histories arrive as overlapping batches on incompatible scales.
# This demo stitches batches back onto one scale, then builds the full daily
# feature table (attention, sentiment, announcement dummies) from raw files.

import datetime as dt
import tempfile
from pathlib import Path

import numpy as np
import pandas as pd

from volcast import attention, synth

# --- stitching, small worked example -------------------------------------
# Two 4-day batches overlapping on two days.  The second batch is rescaled
# by the ratio of overlap-window averages: mean(25, 5) / mean(100, 21).
d0 = dt.date(2020, 1, 1)
b1 = attention.SviBatch("w1", tuple(d0 + dt.timedelta(days=i) for i in range(4)),
                        np.array([50.0, 40.0, 25.0, 5.0]))
b2 = attention.SviBatch("w2", tuple(d0 + dt.timedelta(days=2 + i) for i in range(4)),
                        np.array([100.0, 21.0, 80.0, 60.0]))
out = attention.stitch_batches([b1, b2], min_overlap=2)
print("stitched series:")
print(out)
print(f"scaling constant: {15 / 60.5:.4f} (= mean(25,5) / mean(100,21))")

# --- stitching, long series ----------------------------------------------
# A two-year ground-truth series cut into 270-day batches with 10-day
# overlaps survives the round trip almost perfectly.
rng = np.random.default_rng(0)
truth = rng.lognormal(2.0, 0.8, 540)
chunks = synth.svi_batches_from_series(truth)
batches, pos = [], 0
for i, values in enumerate(chunks):
    dates = tuple(d0 + dt.timedelta(days=pos + j) for j in range(len(values)))
    batches.append(attention.SviBatch(f"b{i}", dates, values))
    pos += len(values) - synth.SVI_OVERLAP
stitched = attention.stitch_batches(batches)
corr = np.corrcoef(stitched.to_numpy(), truth)[0, 1]
print(f"\n{len(chunks)} batches of {len(chunks[0])} days -> correlation with truth {corr:.5f}")

# --- the full feature table ----------------------------------------------
# synth writes raw files in the same formats real providers use; a JSON
# manifest declares how each feature column is built from them.
cfg = synth.SynthConfig(n_days=300, attention_coef=0.2, sentiment_coef=0.1, seed=7)
_, _, _, latent = synth.simulate_stock(cfg)

with tempfile.TemporaryDirectory() as tmp:
    manifest = synth.simulate_feature_files(cfg, latent, Path(tmp))
    print(f"\nraw files: {sorted(p.name for p in Path(tmp).iterdir())}")
    table = attention.build_features(manifest, latent.index)

print(f"\nfeature table: {table.shape[0]} days x {table.shape[1]} columns")
print(pd.Series(table.attrs["roles"]).to_string())
print(table.head().round(2).to_string())

# Weekend observations roll onto the next trading day, daily sentiment is
# the per-document average, and the macro announcement dummy marks the
# trading day whose session the 08:30 release precedes.
print(f"\nannouncement days: {int(table['dummy_macro'].sum())} "
      f"of {len(table)} (monthly cadence)")
