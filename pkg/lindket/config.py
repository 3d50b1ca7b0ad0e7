# Copyright 2024 The lindket Authors - All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#    http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""JSON input files.

Documents use CamelCase keys and ``"Name"``-tagged blocks, e.g.::

    {"System": {"Name": "TwoLevel", "Energy": 1.0, "Rabi": 1.0, "Gamma": 0.5},
     "Integrator": {"Method": "taylor_series", "TimeStep": 0.5, "Order": 10},
     "EndTime": 20.0, "InitialState": {"Name": "Excited"}, "Output": "out.csv"}

Unknown keys are rejected at every level.
"""

import dataclasses
import json
import logging
import os
from dataclasses import dataclass
from typing import Optional, Tuple

from ._core import DEFAULT_MEMORY_BUDGET, ConfigError, ContractViolation
from .integrators import METHODS, IntegratorSpec
from .linalg import ExpmConfig
from .systems import SpinChainSpec, TwoLevelSpec, neel_pattern
from .trajectories import MettsConfig, TrajectoryConfig

logger = logging.getLogger(__name__)

MAX_REPEATS_ENV = "LINDKET_BENCH_MAX_REPEATS"

MIN_REPEATS = 3

INITIAL_STATES = ("Excited", "Thermal", "Neel", "Pattern")


def load_document(path):
    """
    Reads a JSON document.

    Raises:
        ConfigError: The file is missing, is not valid JSON (the line is
            reported) or does not hold an object.
    """
    try:
        with open(path, "r") as f:
            text = f.read()
    except OSError as err:
        raise ConfigError("cannot read {}: {}".format(path, err.strerror))
    try:
        document = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError("{} (column {})".format(err.msg, err.colno), line=err.lineno)
    if not isinstance(document, dict):
        raise ConfigError("top level must be an object")
    return document


def _path(parent, key):
    return key if not parent else "{}.{}".format(parent, key)


def _check_keys(block, allowed, path):
    if not isinstance(block, dict):
        raise ConfigError("expected an object", field=path or None)
    for key in block:
        if key not in allowed:
            raise ConfigError("unknown key", field=_path(path, key))


def _number(block, key, path, default=None, required=False):
    if key not in block:
        if required:
            raise ConfigError("missing field", field=_path(path, key))
        return default
    value = block[key]
    if value is None and not required:
        return default
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError("expected a number, got {!r}".format(value), field=_path(path, key))
    return float(value)


def _integer(block, key, path, default=None, required=False):
    if key not in block:
        if required:
            raise ConfigError("missing field", field=_path(path, key))
        return default
    value = block[key]
    if value is None and not required:
        return default
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError("expected an integer, got {!r}".format(value), field=_path(path, key))
    return value


def _string(block, key, path, default=None, required=False):
    if key not in block:
        if required:
            raise ConfigError("missing field", field=_path(path, key))
        return default
    value = block[key]
    if not isinstance(value, str):
        raise ConfigError("expected a string, got {!r}".format(value), field=_path(path, key))
    return value


def _build(cls, path, **kwargs):
    try:
        return cls(**kwargs)
    except ContractViolation as err:
        raise ConfigError(str(err), field=path)


def system_from_dict(block, path="System"):
    _check_keys(block, ("Name", "Energy", "Rabi", "Gamma", "Hbar", "Length", "Coupling"), path)
    name = _string(block, "Name", path, required=True)
    if name == "TwoLevel":
        _check_keys(block, ("Name", "Energy", "Rabi", "Gamma", "Hbar"), path)
        return _build(
            TwoLevelSpec,
            path,
            energy=_number(block, "Energy", path, 1.0),
            rabi=_number(block, "Rabi", path, 1.0),
            gamma=_number(block, "Gamma", path, 0.5),
            hbar=_number(block, "Hbar", path, 1.0),
        )
    if name == "Heisenberg":
        _check_keys(block, ("Name", "Length", "Coupling", "Gamma", "Hbar"), path)
        return _build(
            SpinChainSpec,
            path,
            length=_integer(block, "Length", path, required=True),
            coupling=_number(block, "Coupling", path, 1.0),
            gamma=_number(block, "Gamma", path, 1.0),
            hbar=_number(block, "Hbar", path, 1.0),
        )
    raise ConfigError("unknown system {!r}".format(name), field=_path(path, "Name"))


def system_to_dict(system):
    if isinstance(system, TwoLevelSpec):
        return {
            "Name": "TwoLevel",
            "Energy": system.energy,
            "Rabi": system.rabi,
            "Gamma": system.gamma,
            "Hbar": system.hbar,
        }
    return {
        "Name": "Heisenberg",
        "Length": system.length,
        "Coupling": system.coupling,
        "Gamma": system.gamma,
        "Hbar": system.hbar,
    }


def integrator_from_dict(block, path="Integrator"):
    _check_keys(
        block,
        (
            "Method",
            "TimeStep",
            "Order",
            "ErrorTarget",
            "MaxOrder",
            "Form",
            "Expm",
            "RelTol",
            "AbsTol",
        ),
        path,
    )
    method = _string(block, "Method", path, required=True)
    if method not in METHODS:
        raise ConfigError(
            "unknown method {!r}, expected one of {}".format(method, METHODS),
            field=_path(path, "Method"),
        )
    expm_block = block.get("Expm", {})
    expm_path = _path(path, "Expm")
    _check_keys(expm_block, ("Method", "Order", "Scaling"), expm_path)
    expm_cfg = _build(
        ExpmConfig,
        expm_path,
        method=_string(expm_block, "Method", expm_path, "taylor_ss"),
        order=_integer(expm_block, "Order", expm_path),
        scaling=_integer(expm_block, "Scaling", expm_path),
    )
    return _build(
        IntegratorSpec,
        path,
        method=method,
        dt=_number(block, "TimeStep", path, required=True),
        order=_integer(block, "Order", path, 10),
        error_target=_number(block, "ErrorTarget", path),
        max_order=_integer(block, "MaxOrder", path, 30),
        form=_string(block, "Form", path, "standard"),
        expm=expm_cfg,
        rtol=_number(block, "RelTol", path, 1e-10),
        atol=_number(block, "AbsTol", path, 1e-12),
    )


def integrator_to_dict(spec):
    return {
        "Method": spec.method,
        "TimeStep": spec.dt,
        "Order": spec.order,
        "ErrorTarget": spec.error_target,
        "MaxOrder": spec.max_order,
        "Form": spec.form,
        "Expm": {
            "Method": spec.expm.method,
            "Order": spec.expm.order,
            "Scaling": spec.expm.scaling,
        },
        "RelTol": spec.rtol,
        "AbsTol": spec.atol,
    }


@dataclass(frozen=True)
class InitialStateSpec:
    """Tagged initial state: `Excited`, `Thermal` (with `beta`), `Neel` or
    `Pattern` (with an up/down `pattern`)."""

    name: str = "Excited"
    beta: Optional[float] = None
    pattern: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        if self.name not in INITIAL_STATES:
            raise ContractViolation(
                "unknown initial state {!r}, expected one of {}".format(self.name, INITIAL_STATES)
            )
        if self.name == "Thermal" and (self.beta is None or self.beta < 0):
            raise ContractViolation("Thermal initial state needs Beta >= 0")
        if self.name == "Pattern":
            if not self.pattern or any(s not in ("up", "down") for s in self.pattern):
                raise ContractViolation("Pattern must be a non-empty list of 'up'/'down'")


def initial_state_from_dict(block, path="InitialState"):
    _check_keys(block, ("Name", "Beta", "Pattern"), path)
    name = _string(block, "Name", path, required=True)
    pattern = block.get("Pattern")
    if pattern is not None:
        if not isinstance(pattern, list):
            raise ConfigError("expected a list", field=_path(path, "Pattern"))
        pattern = tuple(pattern)
    return _build(
        InitialStateSpec,
        path,
        name=name,
        beta=_number(block, "Beta", path),
        pattern=pattern,
    )


def initial_state_to_dict(spec):
    result = {"Name": spec.name}
    if spec.name == "Thermal":
        result["Beta"] = spec.beta
    if spec.name == "Pattern":
        result["Pattern"] = list(spec.pattern)
    return result


def _trajectories_from_dict(block, seed, path="Trajectories"):
    _check_keys(block, ("TimeStep", "NTrajectories", "TaylorOrder", "JumpScheme"), path)
    return _build(
        TrajectoryConfig,
        path,
        dt=_number(block, "TimeStep", path, 0.1),
        n_trajectories=_integer(block, "NTrajectories", path, 1000),
        master_seed=seed,
        taylor_order=_integer(block, "TaylorOrder", path, 10),
        jump_scheme=_string(block, "JumpScheme", path, "norm_loss"),
    )


def _metts_from_dict(block, seed, path="Metts"):
    _check_keys(block, ("Beta", "NSamples", "BurnIn", "Basis", "Chains"), path)
    return _build(
        MettsConfig,
        path,
        beta=_number(block, "Beta", path, 1.0),
        n_samples=_integer(block, "NSamples", path, 1000),
        burn_in=_integer(block, "BurnIn", path, 10),
        master_seed=seed,
        basis=_string(block, "Basis", path, "xz"),
        n_chains=_integer(block, "Chains", path, 1),
    )


_RUN_KEYS = (
    "System",
    "Integrator",
    "EndTime",
    "SampleEvery",
    "InitialState",
    "Elements",
    "MemoryBudgetBytes",
    "Seed",
    "Output",
    "Trajectories",
    "Metts",
)


@dataclass(frozen=True)
class RunConfig:
    """
    Complete description of one run.

    Args:
        system: `TwoLevelSpec` or `SpinChainSpec`.
        integrator: The `IntegratorSpec`.
        t_final: Final time.
        sample_every: Sampling stride in internal steps.
        initial_state: The `InitialStateSpec`.
        elements: Density matrix elements written to the CSV, `None` for
            all diagonal elements.
        memory_budget_bytes: Budget for dense allocations.
        seed: Master seed of every random stream of the run.
        output: CSV path.
        trajectories: Optional `TrajectoryConfig` (trajectory runs).
        metts: Optional `MettsConfig` (METTS runs and thermal trajectory
            starts).
    """

    system: object = dataclasses.field(default_factory=TwoLevelSpec)
    integrator: IntegratorSpec = dataclasses.field(default_factory=IntegratorSpec)
    t_final: float = 1.0
    sample_every: int = 1
    initial_state: InitialStateSpec = dataclasses.field(default_factory=InitialStateSpec)
    elements: Optional[Tuple[Tuple[int, int], ...]] = None
    memory_budget_bytes: int = DEFAULT_MEMORY_BUDGET
    seed: int = 0
    output: str = "out.csv"
    trajectories: Optional[TrajectoryConfig] = None
    metts: Optional[MettsConfig] = None

    def __post_init__(self):
        if self.t_final < 0:
            raise ContractViolation("EndTime must be >= 0, got {}".format(self.t_final))
        if int(self.sample_every) < 1:
            raise ContractViolation("SampleEvery must be >= 1, got {}".format(self.sample_every))
        if int(self.memory_budget_bytes) < 0:
            raise ContractViolation("MemoryBudgetBytes must be >= 0")
        if int(self.seed) < 0 or int(self.seed) >= 2 ** 64:
            raise ContractViolation("Seed must be a 64-bit unsigned integer")
        dim = self.dim
        if self.elements is not None:
            for i, j in self.elements:
                if not (0 <= i < dim and 0 <= j < dim):
                    raise ContractViolation(
                        "element ({}, {}) out of range for dimension {}".format(i, j, dim)
                    )
        name = self.initial_state.name
        if isinstance(self.system, TwoLevelSpec) and name in ("Neel", "Pattern"):
            raise ContractViolation("{} initial state needs a Heisenberg system".format(name))
        if isinstance(self.system, SpinChainSpec):
            if name == "Excited":
                raise ContractViolation("Excited initial state needs a TwoLevel system")
            if name == "Pattern" and len(self.initial_state.pattern) != self.system.length:
                raise ContractViolation(
                    "Pattern has {} sites, system has {}".format(
                        len(self.initial_state.pattern), self.system.length
                    )
                )

    @property
    def dim(self):
        return 2 if isinstance(self.system, TwoLevelSpec) else self.system.dim

    @property
    def element_list(self):
        """Configured elements, defaulting to the diagonal."""
        if self.elements is None:
            return [(i, i) for i in range(self.dim)]
        return [tuple(e) for e in self.elements]

    @property
    def pattern(self):
        """Up/down pattern of a `Neel` or `Pattern` initial state."""
        if self.initial_state.name == "Neel":
            return neel_pattern(self.system.length)
        return list(self.initial_state.pattern)

    def trajectory_config(self):
        base = self.trajectories if self.trajectories is not None else TrajectoryConfig()
        return dataclasses.replace(base, master_seed=int(self.seed))

    def metts_config(self):
        base = self.metts if self.metts is not None else MettsConfig()
        return dataclasses.replace(base, master_seed=int(self.seed))

    def with_overrides(self, seed=None, budget=None, output=None):
        """Copy with command-line overrides applied."""
        changes = {}
        if seed is not None:
            changes["seed"] = int(seed)
            if self.trajectories is not None:
                changes["trajectories"] = dataclasses.replace(
                    self.trajectories, master_seed=int(seed)
                )
            if self.metts is not None:
                changes["metts"] = dataclasses.replace(self.metts, master_seed=int(seed))
        if budget is not None:
            changes["memory_budget_bytes"] = int(budget)
        if output is not None:
            changes["output"] = str(output)
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_dict(cls, document, path=""):
        """
        Builds a `RunConfig` from a parsed JSON document.

        Raises:
            ConfigError: Unknown keys, missing or ill-typed fields, or
                values violating a record's invariants.
        """
        _check_keys(document, _RUN_KEYS, path)
        if "System" not in document:
            raise ConfigError("missing field", field=_path(path, "System"))
        if "Integrator" not in document:
            raise ConfigError("missing field", field=_path(path, "Integrator"))
        seed = _integer(document, "Seed", path, 0)
        system = system_from_dict(document["System"], _path(path, "System"))
        integrator = integrator_from_dict(document["Integrator"], _path(path, "Integrator"))
        initial = initial_state_from_dict(
            document.get("InitialState", {"Name": "Excited"}), _path(path, "InitialState")
        )

        elements = document.get("Elements")
        if elements is not None:
            if not isinstance(elements, list) or any(
                not isinstance(e, list)
                or len(e) != 2
                or any(isinstance(x, bool) or not isinstance(x, int) for x in e)
                for e in elements
            ):
                raise ConfigError(
                    "expected a list of [row, column] pairs", field=_path(path, "Elements")
                )
            elements = tuple(tuple(e) for e in elements)

        trajectories = None
        if "Trajectories" in document:
            trajectories = _trajectories_from_dict(
                document["Trajectories"], seed, _path(path, "Trajectories")
            )
        metts = None
        if "Metts" in document:
            metts = _metts_from_dict(document["Metts"], seed, _path(path, "Metts"))

        return _build(
            cls,
            path or None,
            system=system,
            integrator=integrator,
            t_final=_number(document, "EndTime", path, required=True),
            sample_every=_integer(document, "SampleEvery", path, 1),
            initial_state=initial,
            elements=elements,
            memory_budget_bytes=_integer(
                document, "MemoryBudgetBytes", path, DEFAULT_MEMORY_BUDGET
            ),
            seed=seed,
            output=_string(document, "Output", path, "out.csv"),
            trajectories=trajectories,
            metts=metts,
        )

    def to_dict(self):
        """Inverse of `from_dict`."""
        result = {
            "System": system_to_dict(self.system),
            "Integrator": integrator_to_dict(self.integrator),
            "EndTime": self.t_final,
            "SampleEvery": self.sample_every,
            "InitialState": initial_state_to_dict(self.initial_state),
            "Elements": None if self.elements is None else [list(e) for e in self.elements],
            "MemoryBudgetBytes": self.memory_budget_bytes,
            "Seed": self.seed,
            "Output": self.output,
        }
        if self.elements is None:
            del result["Elements"]
        if self.trajectories is not None:
            result["Trajectories"] = {
                "TimeStep": self.trajectories.dt,
                "NTrajectories": self.trajectories.n_trajectories,
                "TaylorOrder": self.trajectories.taylor_order,
                "JumpScheme": self.trajectories.jump_scheme,
            }
        if self.metts is not None:
            result["Metts"] = {
                "Beta": self.metts.beta,
                "NSamples": self.metts.n_samples,
                "BurnIn": self.metts.burn_in,
                "Basis": self.metts.basis,
                "Chains": self.metts.n_chains,
            }
        return result

    @classmethod
    def load(cls, path):
        return cls.from_dict(load_document(path))


@dataclass(frozen=True)
class CompareConfig:
    """Two runs on the same system compared against a reference
    integrator, optionally over a grid of `(order, sampling step)` cells."""

    a: RunConfig
    b: RunConfig
    reference: IntegratorSpec
    grid: Tuple[Tuple[int, float], ...] = ()

    @classmethod
    def from_dict(cls, document):
        _check_keys(document, ("A", "B", "Reference", "Grid"), "")
        for key in ("A", "B", "Reference"):
            if key not in document:
                raise ConfigError("missing field", field=key)
        a = RunConfig.from_dict(document["A"], "A")
        b = RunConfig.from_dict(document["B"], "B")
        if a.system != b.system:
            raise ConfigError("A and B must describe the same system", field="B.System")
        if a.t_final != b.t_final:
            raise ConfigError("A and B must share EndTime", field="B.EndTime")
        if a.initial_state != b.initial_state:
            raise ConfigError("A and B must share InitialState", field="B.InitialState")
        reference = integrator_from_dict(document["Reference"], "Reference")
        grid = document.get("Grid", [])
        if not isinstance(grid, list) or any(
            not isinstance(cell, list) or len(cell) != 2 for cell in grid
        ):
            raise ConfigError("expected a list of [order, sampling step] pairs", field="Grid")
        cells = []
        for k, (order, step) in enumerate(grid):
            if isinstance(order, bool) or not isinstance(order, int) or order < 1:
                raise ConfigError("order must be a positive integer", field="Grid[{}]".format(k))
            if isinstance(step, bool) or not isinstance(step, (int, float)) or step <= 0:
                raise ConfigError(
                    "sampling step must be positive", field="Grid[{}]".format(k)
                )
            cells.append((order, float(step)))
        return cls(a, b, reference, tuple(cells))

    def to_dict(self):
        return {
            "A": self.a.to_dict(),
            "B": self.b.to_dict(),
            "Reference": integrator_to_dict(self.reference),
            "Grid": [[n, dt] for n, dt in self.grid],
        }

    def with_overrides(self, seed=None, budget=None, output=None):
        return dataclasses.replace(
            self,
            a=self.a.with_overrides(seed, budget, output),
            b=self.b.with_overrides(seed, budget),
        )

    @classmethod
    def load(cls, path):
        return cls.from_dict(load_document(path))


def max_repeats():
    """Upper limit on benchmark repeats from the environment, never below
    the minimum of 3; `None` if unset."""
    value = os.environ.get(MAX_REPEATS_ENV)
    if value is None or value == "":
        return None
    try:
        cap = int(value)
    except ValueError:
        raise ConfigError("expected an integer, got {!r}".format(value), field=MAX_REPEATS_ENV)
    return max(MIN_REPEATS, cap)


@dataclass(frozen=True)
class BenchConfig:
    """Sweep of one-step timings over methods and chain lengths."""

    methods: Tuple[str, ...] = ("taylor_series", "vectorization_full", "vectorization_taylor", "rk4")
    sites: Tuple[int, int] = (4, 11)
    repeats: int = MIN_REPEATS
    order: int = 10
    dt: float = 0.1
    coupling: float = 1.0
    gamma: float = 1.0
    memory_budget_bytes: int = DEFAULT_MEMORY_BUDGET
    output: str = "bench.csv"
    seed: int = 0

    def __post_init__(self):
        for m in self.methods:
            if m not in METHODS:
                raise ContractViolation("unknown method {!r}".format(m))
        lo, hi = self.sites
        if lo < 1 or hi < lo:
            raise ContractViolation("Sites must satisfy 1 <= Lmin <= Lmax")
        if int(self.repeats) < MIN_REPEATS:
            raise ContractViolation("Repeats must be >= {}".format(MIN_REPEATS))

    @property
    def effective_repeats(self):
        cap = max_repeats()
        return self.repeats if cap is None else min(self.repeats, cap)

    @classmethod
    def from_dict(cls, document):
        keys = (
            "Methods",
            "Sites",
            "Repeats",
            "Order",
            "TimeStep",
            "Coupling",
            "Gamma",
            "MemoryBudgetBytes",
            "Output",
            "Seed",
        )
        _check_keys(document, keys, "")
        methods = document.get("Methods", list(cls.methods))
        if not isinstance(methods, list) or not all(isinstance(m, str) for m in methods):
            raise ConfigError("expected a list of method names", field="Methods")
        sites = document.get("Sites", list(cls.sites))
        if (
            not isinstance(sites, list)
            or len(sites) != 2
            or any(isinstance(x, bool) or not isinstance(x, int) for x in sites)
        ):
            raise ConfigError("expected [Lmin, Lmax]", field="Sites")
        return _build(
            cls,
            None,
            methods=tuple(methods),
            sites=tuple(sites),
            repeats=_integer(document, "Repeats", "", MIN_REPEATS),
            order=_integer(document, "Order", "", 10),
            dt=_number(document, "TimeStep", "", 0.1),
            coupling=_number(document, "Coupling", "", 1.0),
            gamma=_number(document, "Gamma", "", 1.0),
            memory_budget_bytes=_integer(
                document, "MemoryBudgetBytes", "", DEFAULT_MEMORY_BUDGET
            ),
            output=_string(document, "Output", "", "bench.csv"),
            seed=_integer(document, "Seed", "", 0),
        )

    def to_dict(self):
        return {
            "Methods": list(self.methods),
            "Sites": list(self.sites),
            "Repeats": self.repeats,
            "Order": self.order,
            "TimeStep": self.dt,
            "Coupling": self.coupling,
            "Gamma": self.gamma,
            "MemoryBudgetBytes": self.memory_budget_bytes,
            "Output": self.output,
            "Seed": self.seed,
        }

    def with_overrides(self, seed=None, budget=None, output=None):
        changes = {}
        if seed is not None:
            changes["seed"] = int(seed)
        if budget is not None:
            changes["memory_budget_bytes"] = int(budget)
        if output is not None:
            changes["output"] = str(output)
        return dataclasses.replace(self, **changes)

    @classmethod
    def load(cls, path):
        return cls.from_dict(load_document(path))
