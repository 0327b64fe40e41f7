"""A miniature benchmark sweep: kriging vs the network across noise levels.

Full-size sweeps (32x32, 20-30 runs, the reference network) are what the
`fieldlab reproduce` command and the acceptance tests run; this demo keeps
the grid, run count, and network small so it finishes in about a minute.

Run from the repository root:

    python3 demos/04_benchmark_table.py
"""

from fieldlab import (ExperimentPlan, TrainConfig, UNetConfig, aggregate,
                      aggregate_table_md, run_plan)

plan = ExperimentPlan(
    family="exponential",
    phi_fractions=(0.15,),
    observed_fractions=(0.3, 0.6),
    models=("kriging", "ml_vsl"),
    runs=3,
    grid=(16, 16),
    base_seed=99,
    unet_vsl=UNetConfig(depth=2, base_channels=6, partial_conv=True,
                        in_channels=1),
    train=TrainConfig(iterations=200, gauss_k=3, blur_k=5),
)

rows = run_plan(plan)
n_failed = sum(r.status != "ok" for r in rows)
print(f"{len(rows)} result rows ({n_failed} failed)\n")
print(aggregate_table_md(aggregate(rows)))
