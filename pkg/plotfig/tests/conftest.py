"""Shared fixture: one small real run whose CSVs the figure tests consume."""

import pytest

TINY_CONFIG = """
model:
  dimension: 4
  parameter_ranges: [[4.0, 12.0]]
twin:
  sigma: 0.3
  obs_components: [0, 2]
  window_steps: 12
  prediction_steps: 6
  transient_steps: 50
schedule:
  beta_max: 4
  N_I: 3
chain:
  burn_in_sweeps: 20
  sample_sweeps: 40
seed: 5
threads: 1
"""


@pytest.fixture(scope="session")
def tiny_run(tmp_path_factory):
    """Directory with the full CSV set from a seconds-scale pipeline run."""
    from pamc.cli import main

    root = tmp_path_factory.mktemp("tiny")
    cfg = root / "run.yaml"
    cfg.write_text(TINY_CONFIG)
    out = root / "out"
    rc = main(["twin", "--config", str(cfg), "--out", str(out)])
    assert rc == 0
    return out
