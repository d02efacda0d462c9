"""Full pipeline: nonlinear measurements, a lying agent, and its exact
identification and correction.

Eight agents on a circle measure pairwise distances. Agent 3 reports a
position that is off by a unit-norm error. The solver sees only the
reported positions and the measurements; the outer loop relinearizes the
distance model while the inner consensus rounds localize the
inconsistency to agent 3's block. The same scenario ships as a YAML file
runnable via `fdirnet run --scenario scenarios/circle_single_fault.yaml`.
"""

from pathlib import Path

import numpy as np

from fdirnet import load_scenario, outer_scp

scenario_path = Path(__file__).resolve().parent.parent \
    / "scenarios" / "circle_single_fault.yaml"
scn = load_scenario(scenario_path)

truth = scn.true_states.data - scn.reported_states.data
print("injected error per agent:")
for i in range(scn.num_agents):
    blk = truth[scn.true_states.structure.slice_of(i)]
    if np.linalg.norm(blk) > 0:
        print(f"  agent {i}: {blk}")

y = scn.measurements()
result = outer_scp(scn.stack, scn.reported_states, y,
                   scn.inner_params, scn.outer_params)

print(f"\nidentified faulty agents: {sorted(result.faults)}")
print(f"outer iterations: {result.outer_iters}, "
      f"final measurement residual: {result.meas_residual:.2e}")
print("reconstructed corrections:")
for i in sorted(result.faults):
    print(f"  agent {i}: {np.round(result.x_star.block(i), 6)}")

err = np.max(np.abs(result.x_star.data - truth))
print(f"max reconstruction error vs ground truth: {err:.2e}")

# convergence texture: how many agents took the closed-form zero branch
# in the last inner round of each outer iteration
for k, rows in enumerate(result.trace.inner):
    print(f"outer {k}: {len(rows)} inner rounds, "
          f"{rows[-1].fastpath_count}/{scn.num_agents} agents on the "
          f"closed-form branch at the end")
