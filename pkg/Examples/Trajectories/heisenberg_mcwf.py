# Copyright 2024 The lindket Authors - All Rights Reserved.

# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at

#    http://www.apache.org/licenses/LICENSE-2.0

# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

from __future__ import print_function

import numpy as np

import lindket as lk

# boundary-driven chain of 5 sites
spec = lk.systems.SpinChainSpec(length=5, coupling=1.0, gamma=1.0)
model = lk.systems.heisenberg_model(spec)

# thermal initial states at beta = 1, one independent METTS chain per trajectory
n_traj = 1000
metts = lk.trajectories.metts_sample(
    model.hamiltonian,
    lk.trajectories.MettsConfig(beta=1.0, n_samples=n_traj, n_chains=n_traj, master_seed=1234),
)

cfg = lk.trajectories.TrajectoryConfig(dt=0.1, n_trajectories=n_traj, master_seed=1234)
ensemble = lk.trajectories.run_ensemble(model, np.array(metts), cfg, t_final=5.0, workers=4)

# master equation solution for comparison
rho0 = lk.systems.thermal_state(model.hamiltonian, 1.0)
integrator = lk.integrators.IntegratorSpec("taylor_series", dt=0.1, order=10)
exact = lk.experiments.states_at(model, rho0, integrator, list(ensemble.times))

up_down = lk.systems.pattern_index(["up", "down", "up", "down", "up"])
for k, t in enumerate(ensemble.times):
    mean, _, error = ensemble.populations(k)
    print(
        "t={:4.1f}  mcwf={:.4f} +- {:.4f}  master={:.4f}".format(
            t, mean[up_down], error[up_down], exact[k][up_down, up_down].real
        )
    )
