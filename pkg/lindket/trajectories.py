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

"""Stochastic unravelings: quantum-jump trajectories of pure states and
minimally entangled typical thermal states (METTS)."""

import collections
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._core import ContractViolation, DegenerateStateError, StepSizeError
from .integrators import step_count
from .linalg import expm
from .stats import statistics
from .systems import site_count
from .utils import random_engine

logger = logging.getLogger(__name__)

# a step is refused at this total jump probability
MAX_JUMP_PROBABILITY = 0.5

JUMP_PROBABILITY_WARNING = 0.1

SURVIVAL_FLOOR = 1e-14

NORM_TOLERANCE = 1e-10

JUMP_SCHEMES = ("norm_loss", "first_order")

METTS_BASES = ("x", "y", "z", "xz", "random")

# spawn key prefix of METTS chains; trajectory streams use one-element keys
METTS_STREAM = 0x4D455454

_SQRT_HALF = math.sqrt(0.5)

# single-site eigenbases, one vector per column
BASIS_MATRICES = {
    "x": np.array([[_SQRT_HALF, _SQRT_HALF], [_SQRT_HALF, -_SQRT_HALF]], dtype=complex),
    "y": np.array([[_SQRT_HALF, _SQRT_HALF], [1j * _SQRT_HALF, -1j * _SQRT_HALF]]),
    "z": np.eye(2, dtype=complex),
}

Trajectory = collections.namedtuple(
    "Trajectory", ["times", "states", "jump_times", "jump_channels"]
)


@dataclass(frozen=True)
class TrajectoryConfig:
    """
    Parameters of a quantum-jump ensemble.

    Args:
        dt: Time step of the first-order jump scheme.
        n_trajectories: Number of trajectories.
        master_seed: Master seed; trajectory `i` draws from stream `i`.
        taylor_order: Number of Taylor terms of the non-Hermitian propagator.
        jump_scheme: `norm_loss` jumps with the norm lost by the
            non-Hermitian step, `first_order` with `sum(dp_i)`.
    """

    dt: float = 0.1
    n_trajectories: int = 1000
    master_seed: int = 0
    taylor_order: int = 10
    jump_scheme: str = "norm_loss"

    def __post_init__(self):
        if not self.dt > 0:
            raise ContractViolation("dt must be positive, got {}".format(self.dt))
        if int(self.n_trajectories) < 1:
            raise ContractViolation(
                "n_trajectories must be >= 1, got {}".format(self.n_trajectories)
            )
        if int(self.taylor_order) < 1:
            raise ContractViolation(
                "taylor_order must be >= 1, got {}".format(self.taylor_order)
            )
        if int(self.master_seed) < 0:
            raise ContractViolation("master_seed must be >= 0, got {}".format(self.master_seed))
        if self.jump_scheme not in JUMP_SCHEMES:
            raise ContractViolation(
                "unknown jump scheme {!r}, expected one of {}".format(
                    self.jump_scheme, JUMP_SCHEMES
                )
            )


@dataclass(frozen=True)
class MettsConfig:
    """
    Parameters of a METTS Markov chain.

    Args:
        beta: Inverse temperature (>= 0).
        n_samples: Number of returned samples (>= 1).
        burn_in: Number of discarded leading samples (>= 0).
        master_seed: Master seed of the chains.
        n_chains: Number of independent chains the samples are split
            over, each with its own burn-in and random stream.
        basis: Collapse basis, one of `x`, `y`, `z`, `xz` (alternating x
            and z) or `random` (random Bloch basis per site).
    """

    beta: float = 1.0
    n_samples: int = 1000
    burn_in: int = 10
    master_seed: int = 0
    basis: str = "xz"
    n_chains: int = 1

    def __post_init__(self):
        if self.beta < 0:
            raise ContractViolation("beta must be >= 0, got {}".format(self.beta))
        if int(self.n_samples) < 1:
            raise ContractViolation("n_samples must be >= 1, got {}".format(self.n_samples))
        if int(self.burn_in) < 0:
            raise ContractViolation("burn_in must be >= 0, got {}".format(self.burn_in))
        if int(self.master_seed) < 0:
            raise ContractViolation("master_seed must be >= 0, got {}".format(self.master_seed))
        if self.basis not in METTS_BASES:
            raise ContractViolation(
                "unknown basis {!r}, expected one of {}".format(self.basis, METTS_BASES)
            )
        if int(self.n_chains) < 1:
            raise ContractViolation("n_chains must be >= 1, got {}".format(self.n_chains))


def _check_psi(psi, dim=None):
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1 or (dim is not None and psi.shape[0] != dim):
        raise ContractViolation(
            "state of shape {} does not match dimension {}".format(psi.shape, dim)
        )
    return psi


def effective_hamiltonian(model):
    r"""
    Non-Hermitian Hamiltonian
    :math:`H_{\rm eff} = H - \frac{i\hbar}{2}\sum_i L_i^\dagger L_i`
    generating the evolution between jumps.
    """
    return np.array(model.h_eff)


def nh_propagate(h_eff, psi, dt, n, hbar=1.0):
    r"""
    Applies the order-n Taylor series of :math:`e^{-iH_{\rm eff}dt/\hbar}`
    to `psi`.

    Returns:
        (numpy.ndarray, float): The renormalized state and the norm of the
        unnormalized one (survival amplitude).

    Raises:
        DegenerateStateError: The survival amplitude is below 1e-14.
    """
    psi = _check_psi(psi, np.shape(h_eff)[0])
    if dt < 0:
        raise ContractViolation("dt must be >= 0, got {}".format(dt))
    factor = -1.0j * dt / hbar
    term = psi
    result = psi.copy()
    for k in range(1, int(n) + 1):
        term = (h_eff @ term) * (factor / k)
        result += term
    survival = float(np.linalg.norm(result))
    if survival < SURVIVAL_FLOOR:
        raise DegenerateStateError(
            "survival norm {:.3g} below {:g}; reduce dt".format(survival, SURVIVAL_FLOOR)
        )
    return result / survival, survival


def jump_probabilities(model, psi, dt):
    r"""Per-channel jump probabilities
    :math:`\delta p_i = dt\,\langle\psi|L_i^\dagger L_i|\psi\rangle`."""
    return np.array(
        [dt * np.real(np.vdot(psi, norm @ psi)) for norm in model.jump_norms], dtype=float
    )


def mcwf_trajectory(model, psi0, cfg, t_final, stream=0, sample_every=1):
    """
    Runs one quantum-jump trajectory.

    Each step of length `cfg.dt` jumps with the probability
    `1 - ||exp(-i H_eff dt / hbar) psi||^2` lost by the non-Hermitian
    evolution (or `sum(dp_i)` for the `first_order` scheme), into channel
    `i` with weight `dp_i`, and otherwise keeps the non-Hermitian evolved
    state. The state is renormalized after either
    branch. The outcome is a pure function of `(cfg.master_seed, stream)`.

    Args:
        model: The `LindbladModel`.
        psi0: Normalized initial state.
        cfg: The `TrajectoryConfig`.
        t_final: Final time (>= 0).
        stream: Random stream index, usually the trajectory number.
        sample_every: Sampling stride in steps.

    Returns:
        Trajectory: Sample times, states of shape `(T, d)`, and the times
        (end of the step) and channels of all jumps.

    Raises:
        StepSizeError: The total jump probability of a step reached 0.5.
        DegenerateStateError: The no-jump evolution collapsed the state.
    """
    psi = _check_psi(psi0, model.dim)
    if abs(np.linalg.norm(psi) - 1.0) > NORM_TOLERANCE:
        raise ContractViolation("initial state is not normalized")
    if t_final < 0:
        raise ContractViolation("t_final must be >= 0, got {}".format(t_final))
    if int(sample_every) < 1:
        raise ContractViolation("sample_every must be >= 1, got {}".format(sample_every))

    rng = random_engine(cfg.master_seed, stream)
    h_eff = model.h_eff
    n_full, remainder = step_count(t_final, cfg.dt)
    total = n_full + (1 if remainder > 0 else 0)

    times = [0.0]
    states = [psi.copy()]
    jump_times = []
    jump_channels = []
    warned = False
    t = 0.0
    for k in range(1, total + 1):
        dt = cfg.dt if k <= n_full else remainder
        dp = jump_probabilities(model, psi, dt)
        p_first = float(dp.sum())
        if p_first >= MAX_JUMP_PROBABILITY:
            raise StepSizeError(
                "total jump probability {:.3g} >= {} at t={:.6g}; reduce dt".format(
                    p_first, MAX_JUMP_PROBABILITY, t
                )
            )
        if p_first > JUMP_PROBABILITY_WARNING and not warned:
            logger.warning(
                "jump probability %.3g per step on stream %d; results are biased at this dt",
                p_first,
                stream,
            )
            warned = True

        propagated, survival = nh_propagate(h_eff, psi, dt, cfg.taylor_order, model.hbar)
        if p_first <= 0:
            p_jump = 0.0
        elif cfg.jump_scheme == "first_order":
            p_jump = p_first
        else:
            p_jump = min(max(1.0 - survival ** 2, 0.0), 1.0)

        r = rng.random()
        t = k * cfg.dt if k <= n_full else float(t_final)
        if r < p_jump:
            # channel weights stay first order
            u = r / p_jump
            channel = int(np.searchsorted(np.cumsum(dp) / p_first, u, side="right"))
            channel = min(channel, len(dp) - 1)
            psi = model.jump_ops[channel] @ psi
            psi = psi / np.linalg.norm(psi)
            jump_times.append(t)
            jump_channels.append(channel)
        else:
            psi = propagated

        if k % int(sample_every) == 0 or k == total:
            times.append(t)
            states.append(psi.copy())

    return Trajectory(
        np.array(times), np.array(states), np.array(jump_times), np.array(jump_channels, dtype=int)
    )


def ensemble_density(states):
    r"""
    Density matrix :math:`\frac{1}{N}\sum_i |\psi_i\rangle\langle\psi_i|`
    of an ensemble of pure states.

    Examples:
        ```python
        >>> import numpy as np
        >>> from lindket.trajectories import ensemble_density
        >>> ensemble_density([[1, 0], [0, 1]]).real
        array([[0.5, 0. ],
               [0. , 0.5]])
        ```
    """
    states = np.asarray(states, dtype=complex)
    if states.ndim != 2 or states.shape[0] == 0:
        raise ContractViolation("need a non-empty list of states of equal dimension")
    return np.einsum("ni,nj->ij", states, states.conj()) / states.shape[0]


@dataclass(frozen=True, eq=False)
class TrajectoryEnsemble:
    """
    Result of `run_ensemble`.

    Args:
        times: Sample times, shape `(T,)`.
        states: States of every trajectory, shape `(N, T, d)`.
        jump_times: Tuple with the jump times of every trajectory.
        seeds: Stream index of every trajectory.
        master_seed: The master seed of the ensemble.
    """

    times: np.ndarray
    states: np.ndarray
    jump_times: tuple
    seeds: np.ndarray
    master_seed: int

    @property
    def n_trajectories(self):
        return self.states.shape[0]

    def density(self, k):
        """Reconstructed density matrix at sample `k`."""
        return ensemble_density(self.states[:, k, :])

    def populations(self, k):
        """Mean and error of the mean of the diagonal of the density
        matrix at sample `k`."""
        return statistics(np.abs(self.states[:, k, :]) ** 2, axis=0)


def run_ensemble(model, initial_states, cfg, t_final, sample_every=1, workers=None):
    """
    Runs `cfg.n_trajectories` quantum-jump trajectories.

    Args:
        model: The `LindbladModel`.
        initial_states: A single normalized state shared by all trajectories
            or one state per trajectory.
        cfg: The `TrajectoryConfig`.
        t_final: Final time.
        sample_every: Sampling stride in steps.
        workers: Threads used for the fan-out; `None` or 1 runs serially.
            The result does not depend on this value.

    Returns:
        TrajectoryEnsemble: The merged ensemble, ordered by trajectory index.
    """
    n = int(cfg.n_trajectories)
    initial_states = np.asarray(initial_states, dtype=complex)
    if initial_states.ndim == 1:
        initial_states = np.broadcast_to(initial_states, (n, initial_states.shape[0]))
    if initial_states.shape[0] != n:
        raise ContractViolation(
            "got {} initial states for {} trajectories".format(initial_states.shape[0], n)
        )

    def run(i):
        return mcwf_trajectory(model, initial_states[i], cfg, t_final, i, sample_every)

    logger.info("running %d trajectories up to t=%g", n, t_final)
    if workers is None or int(workers) <= 1:
        results = [run(i) for i in range(n)]
    else:
        with ThreadPoolExecutor(max_workers=int(workers)) as pool:
            results = list(pool.map(run, range(n)))

    return TrajectoryEnsemble(
        times=results[0].times,
        states=np.stack([r.states for r in results]),
        jump_times=tuple(r.jump_times for r in results),
        seeds=np.arange(n),
        master_seed=int(cfg.master_seed),
    )


def random_bloch_basis(rng):
    """Uniformly random orthonormal single-site basis (as columns)."""
    theta = np.arccos(2.0 * rng.random() - 1.0)
    phi = 2.0 * np.pi * rng.random()
    return np.array(
        [
            [np.cos(theta / 2), -np.sin(theta / 2)],
            [np.exp(1j * phi) * np.sin(theta / 2), np.exp(1j * phi) * np.cos(theta / 2)],
        ]
    )


def collapse_basis(basis, index):
    """Single-site basis name used by the `index`-th collapse of a chain."""
    if basis == "xz":
        return "x" if index % 2 == 0 else "z"
    return basis


def collapse_product_state(psi, length, basis, rng):
    """
    Collapses `psi` site by site (site 0 first) onto a product state of
    single-site basis vectors, drawing each outcome with its Born
    probability.

    Returns:
        (numpy.ndarray, list): The product state and the pair of outcome
        probabilities of every site.
    """
    product = np.array([1.0], dtype=complex)
    probabilities = []
    for _ in range(length):
        u = random_bloch_basis(rng) if basis == "random" else BASIS_MATRICES[basis]
        chi = u.conj().T @ psi.reshape(2, -1)
        p = (float(np.vdot(chi[0], chi[0]).real), float(np.vdot(chi[1], chi[1]).real))
        probabilities.append(p)
        outcome = 0 if rng.random() < p[0] / (p[0] + p[1]) else 1
        product = np.kron(product, u[:, outcome])
        psi = chi[outcome] / math.sqrt(p[outcome])
    return product, probabilities


def metts_sample(hamiltonian, cfg):
    r"""
    Draws METTS :math:`e^{-\beta H/2}|\phi\rangle/\|e^{-\beta H/2}|\phi\rangle\|`
    from a Markov chain over product states :math:`|\phi\rangle`.

    The chain evolves the current product state in imaginary time,
    normalizes it and collapses the result onto the next product state.
    The first `cfg.burn_in` states of every chain are discarded. With
    `cfg.n_chains > 1` the samples come from independent chains, each on
    its own random stream, interleaved so that sample `k` belongs to chain
    `k % n_chains`. With `n_chains == n_samples` the samples are
    independent.

    Args:
        hamiltonian: 2^L x 2^L Hermitian matrix.
        cfg: The `MettsConfig`.

    Returns:
        list of numpy.ndarray: `cfg.n_samples` normalized states.

    Raises:
        DegenerateStateError: The imaginary-time evolved state underflows.
    """
    h = np.asarray(hamiltonian, dtype=complex)
    length = site_count(h.shape[0])
    # a constant shift leaves the normalized states unchanged
    shift = np.trace(h).real / h.shape[0]
    propagator = expm(-0.5 * cfg.beta * (h - shift * np.eye(h.shape[0])))

    n_chains = min(int(cfg.n_chains), int(cfg.n_samples))
    per_chain = -(-int(cfg.n_samples) // n_chains)
    chains = [
        _metts_chain(propagator, length, cfg, per_chain, chain) for chain in range(n_chains)
    ]
    samples = [chains[k % n_chains][k // n_chains] for k in range(int(cfg.n_samples))]
    logger.debug(
        "drew %d METTS from %d chains after %d burn-in steps",
        len(samples),
        n_chains,
        cfg.burn_in,
    )
    return samples


def _metts_chain(propagator, length, cfg, n_samples, chain):
    rng = random_engine(cfg.master_seed, (METTS_STREAM, chain))
    dim = propagator.shape[0]
    product = np.zeros(dim, dtype=complex)
    product[rng.integers(dim)] = 1.0

    samples = []
    for index in range(int(cfg.burn_in) + n_samples):
        phi = propagator @ product
        norm = float(np.linalg.norm(phi))
        if norm < SURVIVAL_FLOOR:
            raise DegenerateStateError(
                "imaginary-time evolved state has norm {:.3g}".format(norm)
            )
        phi = phi / norm
        if index >= cfg.burn_in:
            samples.append(phi)
        product, _ = collapse_product_state(
            phi, length, collapse_basis(cfg.basis, index), rng
        )
    return samples
