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

pars["System"] = {"Name": "Heisenberg", "Length": 4, "Coupling": 1.0, "Gamma": 1.0}
pars["Integrator"] = {"Method": "taylor_series", "TimeStep": 0.1, "Order": 10}
pars["EndTime"] = 0.0
pars["InitialState"] = {"Name": "Thermal", "Beta": 2.0}

# alternate x and z collapses; "x" alone can get stuck in the polarized state
pars["Metts"] = {"Beta": 2.0, "NSamples": 4000, "BurnIn": 20, "Basis": "xz"}
pars["Seed"] = 1234
pars["Output"] = "metts.csv"

json_file = "metts.json"
with open(json_file, "w") as outfile:
    json.dump(pars, outfile, indent=4)

print("\nGenerated Json input file: ", json_file)
print("\nNow run: lindket metts --config " + json_file)
