"""Run the benchmark protocol end to end at desk scale.

Sweeps sampling percentages for three methods on one synthetic dataset,
picking the ridge weight by grid search, and prints the per-method error
and timing table the result CSV would contain.
"""

from kronmc import ExperimentConfig, NoiseSpec, StepSchedule, generate_synthetic, run_sweep

dataset = generate_synthetic(n=40, l=40, graph_p=0.18, eta=1.0, seed=21)

for method, extra in (
    ("kkmcex", {}),
    ("rrmcex", {"feature_dim": 120}),
    ("als", {"rank": 8, "max_iters": 40}),
):
    config = ExperimentConfig(
        method=method,
        ps_grid=(10.0, 25.0, 50.0),
        realizations=5,
        mu_grid=(1e-6, 1e-4, 1e-2, 1.0),
        noise=NoiseSpec.target_snr(4.0),
        schedule=StepSchedule.decay(1.0, 100.0),
        seed=4,
        **extra,
    )
    result = run_sweep(config, dataset)
    for (name, p_s), agg in sorted(result.summary().items()):
        print(f"{name:10s} P_s={p_s:5.1f}%  nmse={agg['nmse']:.5f}  "
              f"fit+predict={agg['seconds']:.3f}s  mu={agg['mu']:g}")
