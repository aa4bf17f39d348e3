"""Run the whole pipeline from a YAML config and print the summary table.

    python demos/make_toy_data.py data/
    python demos/06_full_experiment.py configs/toy_experiment.yaml
"""

import sys

from diffaug.experiment import RunConfig, run_experiment, summary_table, write_report

cfg = RunConfig.load(sys.argv[1] if len(sys.argv) > 1 else "configs/toy_experiment.yaml")
report = run_experiment(cfg)
files = write_report(report, cfg.out)
print(summary_table(report))
print("errors:", report["errors"] or "none")
print("written:", ", ".join(files.values()))
