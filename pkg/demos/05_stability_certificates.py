"""Empirical eventual-stability certificates and decay envelopes.

Eventual uniform stability drops the requirement that the origin be a
solution: the bounds only have to hold for start times past some onset.
The verifier sweeps seeded initial spheres over a start-time grid and
reports per-level (epsilon, delta, onset) witnesses; the envelope fitter
turns decaying trajectories into an exponential bound kappa r e^{-mu s}.
"""

import numpy as np

import evuas as ev

A_H = ev.build_hurwitz([[-1.0, 2.0], [0.0, -1.5]])

# 1) the unforced error system is plainly uniformly stable (onset 0)
fac = ev.make_error_factory(A_H, None, horizon=12.0, tol=1e-8)
rep = ev.verify_evuas(fac, delta0=0.5, t0_grid=[0.0, 1.0, 2.0],
                      eps_levels=[0.6, 0.3], horizon=12.0, samples=6,
                      seed=7, dim=2)
print("unforced error system:", rep.evuas)
for row in rep.evus_table:
    print(f"   eps={row['eps']}: delta={row['delta']}, onset={row['alpha']}")

# 2) a constant disturbance refutes attraction, with replayable witnesses
pert = ev.make_perturbation("const_e1", dim=2)
fac_c = ev.make_error_factory(A_H, pert, horizon=12.0, tol=1e-8)
rep_c = ev.verify_evuas(fac_c, delta0=0.5, t0_grid=[0.0, 1.0, 2.0],
                        eps_levels=[0.5, 0.25], horizon=12.0, samples=6,
                        seed=7, dim=2)
w = rep_c.witnesses[0]
print(f"\nconstant disturbance: attraction={rep_c.evua} "
      f"(witness |E({w['t']:.1f})| = {w['value']:.3f} from t0={w['t0']})")

# 3) the bounded oscillating disturbance needs a strictly positive onset
pert_b = ev.make_perturbation("example1_bounded")
fac_b = ev.make_error_factory(A_H, pert_b, horizon=5.0, tol=1e-6)
rep_b = ev.verify_evuas(fac_b, delta0=0.25, t0_grid=[0.0, 1.0, 2.0, 3.0],
                        eps_levels=[0.8, 0.4], horizon=5.0, samples=4,
                        seed=3, dim=2)
print(f"\nbounded oscillating disturbance: {rep_b.evuas}")
for row in rep_b.evus_table:
    print(f"   eps={row['eps']}: delta={row['delta']}, onset={row['alpha']}"
          + ("   <- eventual, not plain" if row["alpha"] else ""))

# 4) exponential envelope of the unforced decay
trajs = [fac(0.0, np.array(x)) for x in ([0.3, 0.4], [-0.5, 0.1], [0.2, -0.3])]
env = ev.fit_kl_envelope(trajs)
print(f"\nfitted envelope: |E(t)| <= {env.kappa:.2f} |E(0)| "
      f"exp(-{env.mu:.2f} (t - t0))")
for traj in trajs:
    norms = traj.norms()
    bound = env.bound(norms[0], traj.times)
    assert np.all(norms <= bound * (1 + env.slack) + 1e-14)
print("envelope inequality holds on all fitted trajectories")
