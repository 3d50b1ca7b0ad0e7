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

pars["Methods"] = ["taylor_series", "vectorization_full", "vectorization_taylor", "rk4"]
pars["Sites"] = [1, 11]
pars["Repeats"] = 5
pars["Order"] = 10
pars["TimeStep"] = 0.1

# 4 GiB: vectorization is refused from 8 sites on
pars["MemoryBudgetBytes"] = 4 * 2 ** 30
pars["Output"] = "bench.csv"

json_file = "bench.json"
with open(json_file, "w") as outfile:
    json.dump(pars, outfile, indent=4)

print("\nGenerated Json input file: ", json_file)
print("\nNow run: lindket bench -v --config " + json_file)
print("\nSet LINDKET_BENCH_MAX_REPEATS=3 for a quicker sweep.")
