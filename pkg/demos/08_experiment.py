"""
The full pipeline from a spec file
==================================

Same as ``influcomp experiment desk.spec --out desk_run``.
"""

import os
import tempfile

from influcomp.harness import ExperimentSpec, run_experiment

here = os.path.dirname(os.path.abspath(__file__))
spec = ExperimentSpec.load(os.path.join(here, "desk.spec"))

with tempfile.TemporaryDirectory() as tmp:
    out = os.path.join(tmp, "desk_run")
    summary = run_experiment(spec, out)
    print(open(os.path.join(out, "summary.txt")).read())
    print("files:", sorted(os.listdir(out)))

    # Same spec, dataset-scale capacity 500 rescaled to the same onset step.
    later = spec.with_overrides(capacity="500", capacity_reference=True)
    s = run_experiment(later, os.path.join(tmp, "late"))
    print(f"capacity 30: I1 {summary['final_share1']:.3f}; capacity 500 rescaled: "
          f"I1 {s['final_share1']:.3f} (onset {s['predicted_onset']:.0f})")
