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

"""Runs behind the command-line subcommands. Each `run_*` function writes a
CSV plus its manifest and returns a `RunResult`."""

import collections
import dataclasses
import logging
import math
import os
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._core import ConfigError, ContractViolation, MemoryBudgetError, resolve_budget
from ._version import __version__
from .integrators import (
    IntegratorSpec,
    TimeEvolution,
    adaptive_step,
    evolve,
    rk4_step,
    step_count,
    taylor_step,
    vec_full_step,
    vec_taylor_step,
)
from .lindblad import build_superoperator, lindbladian_norm, superoperator_bytes, vectorize
from .output import CsvOutputWriter, write_manifest
from .stats import statistics, stats_dict
from .systems import (
    SpinChainSpec,
    TwoLevelSpec,
    basis_product_state,
    heisenberg_model,
    neel_pattern,
    pure_density,
    thermal_state,
    two_level_model,
)
from .trajectories import metts_sample, run_ensemble

logger = logging.getLogger(__name__)

# largest dimension for which error bounds use the exact Lindbladian norm
NORM_EXACT_MAX_DIM = 32

RunResult = collections.namedtuple("RunResult", ["path", "rows", "manifest"])

GridRow = collections.namedtuple(
    "GridRow", ["order", "sampling_step", "cost_ratio", "t", "taylor_dev", "rk4_dev"]
)

BENCH_COLUMNS = [
    "method",
    "sites",
    "dimension",
    "seconds_per_step",
    "apply_count",
    "peak_bytes_estimate",
    "refusal",
]


@dataclass(frozen=True)
class BenchmarkRecord:
    """
    One cell of a benchmark sweep.

    Args:
        method: Integrator method tag.
        sites: Chain length L.
        dimension: Hilbert space dimension 2^L.
        seconds_per_step: Median wall time of one step, `None` if refused.
        apply_count: Generator applications per step.
        peak_bytes_estimate: Estimated dense storage of the method.
        refusal: Reason the cell was not run, `None` on success.
    """

    method: str
    sites: int
    dimension: int
    seconds_per_step: Optional[float]
    apply_count: int
    peak_bytes_estimate: int
    refusal: Optional[str] = None

    def as_row(self):
        return [getattr(self, c) for c in BENCH_COLUMNS]


def build_model(cfg):
    """The `LindbladModel` of the system of a `RunConfig`."""
    if isinstance(cfg.system, TwoLevelSpec):
        return two_level_model(cfg.system)
    return heisenberg_model(cfg.system, cfg.memory_budget_bytes)


def initial_density(cfg, model):
    """Initial density matrix of a `RunConfig`."""
    name = cfg.initial_state.name
    if name == "Excited":
        return np.diag([0.0, 1.0]).astype(complex)
    if name == "Thermal":
        return thermal_state(model.hamiltonian, cfg.initial_state.beta)
    return pure_density(basis_product_state(cfg.pattern))


def initial_pure_states(cfg, model):
    """
    Initial pure states of the trajectories of a `RunConfig`: one state
    shared by all trajectories, or for a thermal start one METTS per
    trajectory, each from its own independent chain.
    """
    name = cfg.initial_state.name
    if name == "Excited":
        return np.array([0.0, 1.0], dtype=complex)
    if name == "Thermal":
        metts = dataclasses.replace(
            cfg.metts_config(),
            beta=cfg.initial_state.beta,
            n_samples=cfg.trajectory_config().n_trajectories,
            n_chains=cfg.trajectory_config().n_trajectories,
        )
        return np.array(metts_sample(model.hamiltonian, metts))
    return basis_product_state(cfg.pattern)


def error_bound_norm(model, spec, budget=None):
    """Lindbladian norm used for the error bound column; `None` for
    steppers without a truncation bound. The exact norm is used for small
    systems whose superoperator fits the budget."""
    if not spec.uses_order:
        return None
    strategy = "random_probe"
    fits = superoperator_bytes(model.dim) <= resolve_budget(budget)
    if model.dim <= NORM_EXACT_MAX_DIM and fits:
        strategy = "exact_small"
    return lindbladian_norm(model, strategy, budget=budget)


def element_columns(elements):
    columns = []
    for i, j in elements:
        columns += ["rho_{}_{}_re".format(i, j), "rho_{}_{}_im".format(i, j)]
    return columns


def _finish(path, command, config_dict, seed, rows, summary=None):
    manifest = write_manifest(path, command, config_dict, seed, __version__, rows, summary)
    return RunResult(path, rows, manifest)


def states_at(model, rho0, spec, times, budget=None):
    """
    Density matrices at the sorted `times`, stepping `spec` with its time
    step and a shorter final step wherever a time is off the grid.
    """
    driver = TimeEvolution(model, rho0, spec, budget=budget)
    current = 0.0
    states = []
    for t in times:
        if t < current - 1e-12:
            raise ContractViolation("times must be sorted")
        n_full, remainder = step_count(max(t - current, 0.0), spec.dt)
        driver.advance(n_full)
        if remainder > 0:
            driver.step(remainder)
        current = t
        states.append(driver.state)
    return states


def run_evolve(cfg, command="evolve"):
    """Evolves the configured system and writes the sampled elements."""
    logger.info("evolve: %s up to t=%g", cfg.integrator.label, cfg.t_final)
    model = build_model(cfg)
    rho0 = initial_density(cfg, model)
    norm_L = error_bound_norm(model, cfg.integrator, cfg.memory_budget_bytes)
    samples = evolve(
        model,
        rho0,
        cfg.integrator,
        cfg.t_final,
        cfg.sample_every,
        norm_L=norm_L,
        budget=cfg.memory_budget_bytes,
    )
    elements = cfg.element_list
    columns = ["t"] + element_columns(elements) + ["trace", "error_bound"]
    with CsvOutputWriter(cfg.output, columns) as out:
        for sample in samples:
            row = [float(sample.t)]
            for i, j in elements:
                row += [float(sample.rho[i, j].real), float(sample.rho[i, j].imag)]
            row += [float(np.trace(sample.rho).real), sample.report.error_bound]
            out.write_row(row)
    return _finish(cfg.output, command, cfg.to_dict(), cfg.seed, out.rows)


def _max_deviation(rho, reference, elements=None):
    if elements is None:
        return float(np.max(np.abs(rho - reference)))
    return float(max(abs(rho[i, j] - reference[i, j]) for i, j in elements))


def accuracy_grid(system, initial, grid, rk4_dt, reference, t_final, elements=None, budget=None):
    """
    Deviations of Taylor series runs on a grid of `(order, sampling step)`
    cells and of RK4 runs at step `rk4_dt`, both measured against the
    `reference` integrator at the sampling times of each cell.

    Args:
        system: The `LindbladModel`.
        initial: Initial density matrix.
        grid: Iterable of `(order, sampling_step)` pairs.
        rk4_dt: Time step of the RK4 comparison; every sampling step must be
            an integer multiple of it.
        reference: `IntegratorSpec` of the reference solution.
        t_final: Final time.
        elements: Elements entering the maximum deviation, `None` for all.
        budget: Memory budget of the reference.

    Returns:
        list of GridRow: `cost_ratio` is `n / (4 * sampling_step / rk4_dt)`,
        the number of generator applications of a Taylor step relative to
        the RK4 steps covering the same interval.
    """
    cells = []
    all_times = set()
    for order, step in grid:
        ratio = step / rk4_dt
        stride = int(round(ratio))
        if stride < 1 or abs(ratio - stride) > 1e-9 * max(1.0, ratio):
            raise ConfigError(
                "sampling step {} is not a multiple of the RK4 step {}".format(step, rk4_dt),
                field="Grid",
            )
        taylor = evolve(
            system, initial, IntegratorSpec("taylor_series", dt=step, order=order), t_final
        )
        rk4 = evolve(system, initial, IntegratorSpec("rk4", dt=rk4_dt), t_final, stride)
        cells.append((order, step, stride, taylor, rk4))
        all_times.update(s.t for s in taylor)

    times = sorted(all_times)
    ref_states = dict(zip(times, states_at(system, initial, reference, times, budget)))

    rows = []
    for order, step, stride, taylor, rk4 in cells:
        cost_ratio = order / (4.0 * stride)
        for ts, rs in zip(taylor, rk4):
            ref = ref_states[ts.t]
            rows.append(
                GridRow(
                    order,
                    step,
                    cost_ratio,
                    ts.t,
                    _max_deviation(ts.rho, ref, elements),
                    _max_deviation(rs.rho, ref, elements),
                )
            )
        logger.info("grid cell n=%d step=%g done", order, step)
    return rows


def grid_path(path):
    root, ext = os.path.splitext(str(path))
    return root + "_grid" + (ext or ".csv")


def run_compare(cfg, command="compare"):
    """
    Compares runs `A` and `B` against the reference integrator and, when a
    grid is configured, writes the accuracy grid next to the output, using
    the time step of `B` for the RK4 column.
    """
    a, b = cfg.a, cfg.b
    logger.info(
        "compare: %s vs %s, reference %s", a.integrator.label, b.integrator.label,
        cfg.reference.label
    )
    model = build_model(a)
    rho0 = initial_density(a, model)
    budget = a.memory_budget_bytes
    samples_a = evolve(model, rho0, a.integrator, a.t_final, a.sample_every, budget=budget)
    samples_b = evolve(model, rho0, b.integrator, b.t_final, b.sample_every, budget=budget)

    # sample times of A and B are matched up to roundoff
    by_time_a = {round(s.t, 12): s.rho for s in samples_a}
    by_time_b = {round(s.t, 12): s.rho for s in samples_b}
    times = sorted(set(by_time_a) | set(by_time_b))
    references = states_at(model, rho0, cfg.reference, times, budget)

    with CsvOutputWriter(a.output, ["t", "method_a_dev", "method_b_dev"]) as out:
        for t, ref in zip(times, references):
            dev_a = _max_deviation(by_time_a[t], ref) if t in by_time_a else None
            dev_b = _max_deviation(by_time_b[t], ref) if t in by_time_b else None
            out.write_row([float(t), dev_a, dev_b])

    summary = None
    if cfg.grid:
        rows = accuracy_grid(
            model, rho0, cfg.grid, b.integrator.dt, cfg.reference, a.t_final, budget=budget
        )
        with CsvOutputWriter(grid_path(a.output), list(GridRow._fields)) as grid_out:
            for row in rows:
                grid_out.write_row([row.order, row.sampling_step, row.cost_ratio, row.t,
                                    row.taylor_dev, row.rk4_dev])
        summary = {"Grid": grid_path(a.output), "GridRows": grid_out.rows}
    return _finish(a.output, command, cfg.to_dict(), a.seed, out.rows, summary)


def peak_bytes_estimate(method, dim):
    """Rough dense storage of one step of `method` at dimension `dim`."""
    matrix = 16 * dim * dim
    if method == "vectorization_full":
        return 2 * superoperator_bytes(dim) + 2 * matrix
    if method == "vectorization_taylor":
        return superoperator_bytes(dim) + 3 * matrix
    if method == "rk4":
        return 6 * matrix
    if method == "adaptive_rk":
        return 10 * matrix
    return 4 * matrix


def _stepper(method, model, rho, spec, budget):
    """Returns `(callable performing one step, apply count)`."""
    if method == "taylor_series":
        return (lambda: taylor_step(model, rho, spec.dt, spec.order)), spec.order
    if method == "rk4":
        return (lambda: rk4_step(model, rho, spec.dt)), 4
    if method == "adaptive_rk":
        _, nfev = adaptive_step(model, rho, spec.dt, spec.rtol, spec.atol)
        return (lambda: adaptive_step(model, rho, spec.dt, spec.rtol, spec.atol)), nfev
    superop = build_superoperator(model, budget)
    v = vectorize(rho)
    if method == "vectorization_full":
        return (lambda: vec_full_step(superop, v, spec.dt, spec.expm)), 1
    return (lambda: vec_taylor_step(superop, v, spec.dt, spec.order)), spec.order


def bench_cell(method, sites, cfg, repeats):
    """Times one step of `method` on the Néel-initialized chain of `sites`
    sites. The median over `repeats` follows one warm-up step."""
    dim = 2 ** sites
    spec = IntegratorSpec(method, dt=cfg.dt, order=cfg.order)
    peak = peak_bytes_estimate(method, dim)
    apply_count = spec.order if spec.uses_order else (4 if method == "rk4" else 1)
    try:
        model = heisenberg_model(
            SpinChainSpec(sites, cfg.coupling, cfg.gamma), cfg.memory_budget_bytes
        )
        rho = pure_density(basis_product_state(neel_pattern(sites)))
        step, apply_count = _stepper(method, model, rho, spec, cfg.memory_budget_bytes)
    except MemoryBudgetError as err:
        logger.info("bench: %s at L=%d refused: %s", method, sites, err)
        return BenchmarkRecord(method, sites, dim, None, apply_count, peak, str(err))

    step()
    timings = []
    for _ in range(repeats):
        start = time.perf_counter()
        step()
        timings.append(time.perf_counter() - start)
    seconds = float(np.median(timings))
    logger.info("bench: %s at L=%d: %.3g s/step", method, sites, seconds)
    return BenchmarkRecord(method, sites, dim, seconds, apply_count, peak)


def scaling_slope(records, method):
    """Least-squares slope of log10(seconds_per_step) against L for the
    successful records of `method`; `None` with fewer than two points."""
    points = [
        (r.sites, math.log10(r.seconds_per_step))
        for r in records
        if r.method == method and r.seconds_per_step
    ]
    if len(points) < 2:
        return None
    x, y = zip(*points)
    return float(np.polyfit(x, y, 1)[0])


def run_bench(cfg, command="bench"):
    """Runs the benchmark sweep; cells exceeding the budget are recorded as
    refusals and the sweep continues."""
    repeats = cfg.effective_repeats
    lo, hi = cfg.sites
    logger.info("bench: methods %s, L=%d..%d, %d repeats", cfg.methods, lo, hi, repeats)
    records = []
    with CsvOutputWriter(cfg.output, BENCH_COLUMNS) as out:
        for method in cfg.methods:
            for sites in range(lo, hi + 1):
                record = bench_cell(method, sites, cfg, repeats)
                records.append(record)
                out.write_row(record.as_row())
    summary = {"Slopes": {m: scaling_slope(records, m) for m in cfg.methods}, "Repeats": repeats}
    return _finish(cfg.output, command, cfg.to_dict(), cfg.seed, out.rows, summary)


def _element_samples(states, i, j):
    return np.real(states[..., i] * np.conj(states[..., j]))


def run_traj(cfg, command="traj", workers=None):
    """
    Runs a quantum-jump ensemble and compares the reconstructed elements
    with the master equation solved by the configured integrator.
    """
    tcfg = cfg.trajectory_config()
    logger.info("traj: %d trajectories, dt=%g", tcfg.n_trajectories, tcfg.dt)
    model = build_model(cfg)
    psi0 = initial_pure_states(cfg, model)
    rho0 = initial_density(cfg, model)
    ensemble = run_ensemble(model, psi0, tcfg, cfg.t_final, cfg.sample_every, workers)
    times = list(ensemble.times)
    references = states_at(model, rho0, cfg.integrator, times, cfg.memory_budget_bytes)

    columns = ["t", "element", "mcwf_value", "reference_value", "stderr_estimate"]
    with CsvOutputWriter(cfg.output, columns) as out:
        for k, (t, ref) in enumerate(zip(times, references)):
            states = ensemble.states[:, k, :]
            for i, j in cfg.element_list:
                stats = statistics(_element_samples(states, i, j))
                out.write_row(
                    [float(t), "rho_{}_{}".format(i, j), float(stats.mean),
                     float(ref[i, j].real), float(stats.error_of_mean)]
                )
    n_jumps = statistics([len(j) for j in ensemble.jump_times])
    summary = {"Jumps": stats_dict(n_jumps)}
    return _finish(cfg.output, command, cfg.to_dict(), cfg.seed, out.rows, summary)


def _checkpoints(n):
    points = []
    k = 1
    while k < n:
        points.append(k)
        k *= 2
    points.append(n)
    return points


def run_metts(cfg, command="metts"):
    """Draws METTS for the configured system and writes running averages of
    the elements at powers of two and at the final sample count."""
    mcfg = cfg.metts_config()
    logger.info("metts: %d samples at beta=%g, basis %s", mcfg.n_samples, mcfg.beta, mcfg.basis)
    model = build_model(cfg)
    samples = np.array(metts_sample(model.hamiltonian, mcfg))
    reference = thermal_state(model.hamiltonian, mcfg.beta)

    columns = ["samples", "element", "metts_value", "reference_value", "stderr_estimate"]
    with CsvOutputWriter(cfg.output, columns) as out:
        for n in _checkpoints(len(samples)):
            for i, j in cfg.element_list:
                stats = statistics(_element_samples(samples[:n], i, j))
                out.write_row(
                    [n, "rho_{}_{}".format(i, j), float(stats.mean),
                     float(reference[i, j].real), float(stats.error_of_mean)]
                )
    return _finish(cfg.output, command, cfg.to_dict(), cfg.seed, out.rows)
