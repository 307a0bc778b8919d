"""Two built-in dataset recipes beyond the random synthetic generator.

Station-day: rows are measuring stations on a plane (k-nearest graph,
hop-count geodesics, heat weights), columns are days (band graph); good
for spatio-temporal readings.  Class-agreement: items described by
categorical attributes, one-hot encoded into Pearson-correlation kernels
on both sides, with a +/-1 same-class target; here the ridge variant uses
SVD-based features of the encoded attribute matrix.
"""

import numpy as np

from kronmc import (KroneckerKernel, class_agreement_bundle, features_from_svd,
                    kkmcex_fit, kkmcex_predict, nmse, observe, rrmcex_fit,
                    rrmcex_predict, synthetic_categorical_table,
                    synthetic_station_day_bundle, uniform_sample)

stations = synthetic_station_day_bundle(n_stations=25, n_days=50, k=6,
                                        day_band=7, seed=1)
n, l = stations.shape
omega = uniform_sample(n, l, count=(n * l) // 4, seed=2)
model = kkmcex_fit(KroneckerKernel(stations.kx, stations.ky),
                   observe(stations.f, omega), mu=1e-8)
print(f"station-day grid {n} x {l}, 25% observed: "
      f"nmse={nmse(kkmcex_predict(model), stations.f):.2e}")

rows, labels = synthetic_categorical_table(n_rows=80, n_attrs=10, seed=3)
items = class_agreement_bundle(rows, labels, subsample=60, seed=4)
m, _ = items.shape
omega = uniform_sample(m, m, count=(m * m) // 3, seed=5)
obs = observe(items.f, omega)

exact = kkmcex_predict(kkmcex_fit(KroneckerKernel(items.kx, items.ky), obs, 1e-2))
sign_acc = np.mean(np.sign(exact) == items.f)
print(f"class agreement {m} x {m}, 33% observed: closed form "
      f"nmse={nmse(exact, items.f):.3f}, sign accuracy={sign_acc:.2%}")

features = features_from_svd(items.x, items.y, d=40)
approx = rrmcex_predict(rrmcex_fit(features, obs, 1e-2))
print(f"SVD features d=40:                       ridge "
      f"nmse={nmse(approx, items.f):.3f}, "
      f"sign accuracy={np.mean(np.sign(approx) == items.f):.2%}")
