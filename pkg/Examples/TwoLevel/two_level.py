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

pars = {}

# driven two-level system with spontaneous decay
pars["System"] = {"Name": "TwoLevel", "Energy": 1.0, "Rabi": 1.0, "Gamma": 0.5, "Hbar": 1.0}

# ten Taylor terms per step of length 0.5
pars["Integrator"] = {"Method": "taylor_series", "TimeStep": 0.5, "Order": 10}

pars["EndTime"] = 20.0
pars["InitialState"] = {"Name": "Excited"}
pars["Output"] = "two_level.csv"

json_file = "two_level.json"
with open(json_file, "w") as outfile:
    json.dump(pars, outfile, indent=4)

# the same run with the full superoperator exponential, for comparison
compare = {
    "A": pars,
    "B": dict(pars, Integrator={"Method": "vectorization_full", "TimeStep": 0.1}, SampleEvery=5),
    "Reference": {"Method": "vectorization_full", "TimeStep": 0.001},
}
with open("two_level_compare.json", "w") as outfile:
    json.dump(compare, outfile, indent=4)

print("\nGenerated Json input files: ", json_file, "two_level_compare.json")
print("\nNow run: lindket evolve --config " + json_file)
print("\n     or: lindket compare --config two_level_compare.json --out compare.csv")
