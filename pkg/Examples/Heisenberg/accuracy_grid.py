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

import json

L = 9

run = {}
run["System"] = {"Name": "Heisenberg", "Length": L, "Coupling": 1.0, "Gamma": 1.0}
run["InitialState"] = {"Name": "Neel"}
run["EndTime"] = 10.0
# populations of the Neel state and of its spin-flipped partner
run["Elements"] = [[0b010101010, 0b010101010], [0b101010101, 0b101010101]]

a = dict(run, Integrator={"Method": "taylor_series", "TimeStep": 0.5, "Order": 10})
b = dict(run, Integrator={"Method": "rk4", "TimeStep": 0.1}, SampleEvery=5)

pars = {}
pars["A"] = a
pars["B"] = b
pars["Reference"] = {"Method": "taylor_series", "TimeStep": 0.05, "Order": 16}

# (order, sampling step) cells; RK4 runs at the time step of B
pars["Grid"] = [[n, dt] for dt in (0.5, 1.0, 2.0) for n in (5, 10, 20)]

json_file = "heisenberg_grid.json"
with open(json_file, "w") as outfile:
    json.dump(pars, outfile, indent=4)

print("\nGenerated Json input file: ", json_file)
print("\nNow run: lindket compare -v --config " + json_file + " --out heisenberg.csv")
