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

"""Model builders and initial states.

Spin chains use the tensor ordering where site 0 is the most significant
factor and the single-site basis is ``|up> = (1, 0)``, ``|down> = (0, 1)``.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import linalg
from ._core import COMPLEX_BYTES, ContractViolation, check_budget
from .lindblad import LindbladModel

logger = logging.getLogger(__name__)

AXES = ("x", "y", "z", "plus", "minus")

UP = "up"
DOWN = "down"

_SPIN_HALF = {
    "x": 0.5 * np.array([[0, 1], [1, 0]], dtype=complex),
    "y": 0.5 * np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": 0.5 * np.array([[1, 0], [0, -1]], dtype=complex),
    "plus": np.array([[0, 1], [0, 0]], dtype=complex),
    "minus": np.array([[0, 0], [1, 0]], dtype=complex),
}


@dataclass(frozen=True)
class TwoLevelSpec:
    """
    Driven two-level system with spontaneous decay,
    ``H = E|1><1| + Rabi(|0><1| + |1><0|)`` and ``L = sqrt(Gamma)|0><1|``.
    """

    energy: float = 1.0
    rabi: float = 1.0
    gamma: float = 0.5
    hbar: float = 1.0

    def __post_init__(self):
        if self.gamma < 0:
            raise ContractViolation("gamma must be >= 0, got {}".format(self.gamma))
        if not self.hbar > 0:
            raise ContractViolation("hbar must be positive, got {}".format(self.hbar))


@dataclass(frozen=True)
class SpinChainSpec:
    """
    Open Heisenberg chain of spin-1/2 sites driven at its boundaries.

    Args:
        length: Number of sites L (>= 1).
        coupling: Exchange coupling J in ``H = -J sum_i S_i . S_{i+1}``.
        gamma: Boundary pumping rate; the jump operators are
            ``sqrt(2 gamma) S_0^+`` and ``sqrt(2 gamma) S_{L-1}^-``.
        hbar: Reduced Planck constant.
    """

    length: int = 5
    coupling: float = 1.0
    gamma: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        if int(self.length) < 1:
            raise ContractViolation("length must be >= 1, got {}".format(self.length))
        if self.gamma < 0:
            raise ContractViolation("gamma must be >= 0, got {}".format(self.gamma))
        if not self.hbar > 0:
            raise ContractViolation("hbar must be positive, got {}".format(self.hbar))

    @property
    def dim(self):
        return 2 ** int(self.length)


def _embed(local, site, length, budget=None):
    left = np.eye(2 ** site, dtype=complex)
    right = np.eye(2 ** (length - site - site_count(local.shape[0])), dtype=complex)
    return linalg.kron(linalg.kron(left, local, budget), right, budget)


def spin_operator(site, axis, length, budget=None):
    r"""
    Spin-1/2 operator acting on `site` of a chain of `length` sites,
    :math:`I\otimes\dots\otimes S^{a}\otimes\dots\otimes I`.

    Args:
        site: 0-based site index.
        axis: One of `x`, `y`, `z` (half Pauli matrices), `plus` or `minus`
            (:math:`S^\pm = S^x \pm iS^y`).
        length: Number of sites.
        budget: Memory budget for the dense result.

    Examples:
        ```python
        >>> from lindket.systems import spin_operator
        >>> spin_operator(0, "plus", 1).real
        array([[0., 1.],
               [0., 0.]])
        ```
    """
    if axis not in AXES:
        raise ContractViolation("unknown axis {!r}, expected one of {}".format(axis, AXES))
    if not 0 <= site < length:
        raise ContractViolation("site {} out of range for length {}".format(site, length))
    return _embed(_SPIN_HALF[axis], int(site), int(length), budget)


def total_sz(length, budget=None):
    """Total magnetization operator ``sum_i S_i^z``."""
    return sum(spin_operator(i, "z", length, budget) for i in range(length))


def site_count(dim):
    """Number of spin-1/2 sites of a Hilbert space of dimension `dim`."""
    if dim < 1 or dim & (dim - 1):
        raise ContractViolation("dimension {} is not a power of two".format(dim))
    return int(dim).bit_length() - 1


def two_level_model(spec=None):
    """
    Builds the `LindbladModel` of a `TwoLevelSpec`. The ground state energy
    is 0; with `gamma == 0` the model has no jump operators.
    """
    spec = TwoLevelSpec() if spec is None else spec
    h = np.array([[0.0, spec.rabi], [spec.rabi, spec.energy]], dtype=complex)
    jumps = ()
    if spec.gamma > 0:
        jumps = (math.sqrt(spec.gamma) * np.array([[0, 1], [0, 0]], dtype=complex),)
    return LindbladModel(h, jumps, spec.hbar)


def heisenberg_model(spec=None, budget=None):
    """
    Builds the boundary-driven Heisenberg chain of a `SpinChainSpec`.

    A single site has no bonds and gives ``H = 0``; both jump operators
    then act on that site.

    Raises:
        MemoryBudgetError: A dense 2^L x 2^L matrix does not fit the budget.
    """
    spec = SpinChainSpec() if spec is None else spec
    length = int(spec.length)
    d = spec.dim
    check_budget(
        COMPLEX_BYTES * d * d, budget, "Heisenberg chain of {} sites".format(length)
    )

    bond = sum(np.kron(_SPIN_HALF[a], _SPIN_HALF[a]) for a in ("x", "y", "z"))
    h = np.zeros((d, d), dtype=complex)
    for i in range(length - 1):
        h += _embed(bond, i, length, budget)
    h *= -spec.coupling

    rate = math.sqrt(2.0 * spec.gamma)
    source = rate * spin_operator(0, "plus", length, budget)
    drain = rate * spin_operator(length - 1, "minus", length, budget)
    logger.debug("Heisenberg chain L=%d built (dimension %d)", length, d)
    return LindbladModel(h, (source, drain), spec.hbar)


def thermal_state(hamiltonian, beta):
    r"""
    Gibbs state :math:`e^{-\beta H}/\mathrm{Tr}\,e^{-\beta H}`.

    The weights are computed in the eigenbasis of `hamiltonian` relative to
    its ground state energy, so large `beta` tends to the ground state
    projector without overflow.

    Examples:
        ```python
        >>> import numpy as np
        >>> from lindket.systems import thermal_state
        >>> np.allclose(thermal_state(np.diag([0.0, 1.0]), 0.0), np.eye(2) / 2)
        True
        ```
    """
    if beta < 0:
        raise ContractViolation("beta must be >= 0, got {}".format(beta))
    h = linalg.as_matrix(hamiltonian, "hamiltonian")
    energies, vectors = scipy.linalg.eigh(0.5 * (h + h.conj().T))
    weights = np.exp(-beta * (energies - energies[0]))
    weights /= weights.sum()
    rho = (vectors * weights) @ vectors.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real


def neel_pattern(length):
    """Alternating pattern ``[up, down, up, ...]`` of `length` sites."""
    return [UP if i % 2 == 0 else DOWN for i in range(length)]


def pattern_index(pattern):
    """Index of the computational basis state of an up/down pattern."""
    index = 0
    for i, s in enumerate(pattern):
        if s not in (UP, DOWN):
            raise ContractViolation(
                "pattern entry {} is {!r}, expected 'up' or 'down'".format(i, s)
            )
        index = 2 * index + (1 if s == DOWN else 0)
    return index


def basis_product_state(pattern):
    """
    Computational basis vector of an up/down pattern.

    Examples:
        ```python
        >>> from lindket.systems import basis_product_state
        >>> basis_product_state(["up", "down"]).real
        array([0., 1., 0., 0.])
        ```
    """
    if len(pattern) < 1:
        raise ContractViolation("pattern must not be empty")
    psi = np.zeros(2 ** len(pattern), dtype=complex)
    psi[pattern_index(pattern)] = 1.0
    return psi


def pure_density(psi):
    """Projector ``|psi><psi|``."""
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())
