"""Watch the action levels flatten as the model-error precision rises.

The diagnostic at the heart of the method: for each rung of the precision
ladder, print the minimum and spread of the action across the chain
ensemble, its measurement/model split, and the running forcing estimate.
When enough components are observed, the action becomes independent of R_f
at high rungs (a plateau) and the model error falls well below the
measurement error; the plateau diagnostic at the bottom summarizes this.

Run:  python3 demos/action_levels.py
"""

import numpy as np

from pamc import (
    AnnealSchedule,
    ChainConfig,
    InitRanges,
    TwinConfig,
    generate_twin,
    pamc_run,
    plateau_diagnostic,
)

SEED = 5

cfg = TwinConfig(
    sigma=0.4,
    dimension=5,
    window_steps=80,
    obs_components=(0, 2, 3),
    prediction_steps=0,
    transient_steps=500,
    seed=SEED,
)
data = generate_twin(cfg)

schedule = AnnealSchedule(beta_max=25, N_I=5)
chains = ChainConfig(burn_in_sweeps=100, sample_sweeps=200)
ranges = InitRanges.from_observations(data.observations, cfg.dimension,
                                      param_ranges=[[4.0, 12.0]])
record = pamc_run(data.observations, cfg.model(), schedule, chains, ranges,
                  rng=SEED, n_transitions=cfg.window_steps)

print(f"{'beta':>4} {'R_f':>12} {'min action':>12} {'spread':>10} "
      f"{'meas err':>10} {'model err':>10} {'nu (mean)':>9}")
for beta in range(schedule.beta_max + 1):
    rows = record.rows_at(beta)
    best = min(rows, key=lambda r: r.action_total)
    spread = max(r.action_total for r in rows) - best.action_total
    nu = np.mean([r.params[0] for r in rows])
    print(f"{beta:>4} {best.R_f:>12.4g} {best.action_total:>12.5g} "
          f"{spread:>10.3g} {best.measurement_error:>10.5g} "
          f"{best.model_error:>10.5g} {nu:>9.4f}")

flat, rel = plateau_diagnostic(record, window=10, tol=0.01)
print(f"\nplateau over the last 10 rungs: {'yes' if flat else 'no'} "
      f"(relative change {rel:.4f})")
best = min(record.rows_at(schedule.beta_max), key=lambda r: r.action_total)
ratio = best.model_error / best.measurement_error
print(f"model/measurement error at the top rung: {ratio:.4f}")
