#
# Part of bcmlab: bidirectional consistency models on toy densities
# Copyright (C) 2024-2026 The bcmlab developers
#
# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful, but
# WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE. See the GNU
# General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with this program. If not, see <http://www.gnu.org/licenses/>.
#
"""Noise-scale grids, the training curriculum and the noise schedule.

Indices follow the 1-based convention of the training algorithm: a grid
holds :math:`t_1 < \\dots < t_N` and the noise schedule is a pmf over
the interval indices :math:`n \\in \\{1, \\dots, N-1\\}`, interval ``n``
being :math:`[t_n, t_{n+1}]`.

"""

import functools
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    'TimeGrid', 'StepSchedule', 'NoisePmf',
    'build_grid', 'step_count', 'noise_pmf',
    'sample_index_pair', 'sample_index_pairs',
    'weights', 'pair_coverage_pmf', 'coverage_records', 'train_grid',
]

T_MIN = 0.002
T_MAX = 80.0
RHO = 7.0
P_MEAN = -1.1
P_STD = 2.0
S0 = 10
S1 = 1280


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """A rho-spaced ladder of noise scales.

    :param values: The scales :math:`t_1, \\dots, t_N`, strictly
        increasing, read-only.

    """
    t_min: float
    t_max: float
    n_steps: int
    rho: float
    values: np.ndarray = field(repr=False)

    def __len__(self):
        return self.n_steps

    def t(self, n):
        """Return :math:`t_n` for a 1-based index (or index array)."""
        return self.values[np.asarray(n) - 1]


@dataclass(frozen=True)
class StepSchedule:
    """Curriculum for the number of grid points :math:`N(k)`.

    :param s0: Initial number of intervals.
    :param s1: Final number of intervals.
    :param total_iters: Total training iterations :math:`K`.

    """
    s0: int = S0
    s1: int = S1
    total_iters: int = 1

    def __post_init__(self):
        if self.s0 < 1 or self.s1 < self.s0:
            raise ValueError("Need 1 <= s0 <= s1, got s0={}, s1={}".format(
                self.s0, self.s1))
        if self.total_iters < 0:
            raise ValueError("total_iters must be >= 0")

    @property
    def k_prime(self):
        """The doubling period :math:`K'`, never smaller than one."""
        periods = math.log2(self.s1 / self.s0) + 1
        return max(1, math.floor(self.total_iters / periods))


@dataclass(frozen=True, eq=False)
class NoisePmf:
    """Probabilities of the interval indices :math:`n = 1 \\dots N-1`.

    ``probs[i]`` is :math:`p(n = i + 1)`.

    """
    probs: np.ndarray = field(repr=False)
    p_mean: float = P_MEAN
    p_std: float = P_STD

    @property
    def support(self):
        return np.arange(1, len(self.probs) + 1)


def _readonly(values):
    values.setflags(write=False)
    return values


def build_grid(t_min=T_MIN, t_max=T_MAX, n_steps=S1 + 1, rho=RHO):
    """Build the rho-spaced grid between ``t_min`` and ``t_max``.

    .. math::

        t_n = \\left(t_{min}^{1/\\rho} + \\frac{n-1}{N-1}
        (t_{max}^{1/\\rho} - t_{min}^{1/\\rho})\\right)^\\rho

    Examples ::

        >>> build_grid(1, 3, 3, 1).values
        array([1., 2., 3.])

    :raises ValueError: When ``t_min <= 0``, ``t_max <= t_min``,
        ``n_steps < 2`` or ``rho <= 0``.

    """
    if not t_min > 0:
        raise ValueError("t_min must be positive, got {}".format(t_min))
    if not t_max > t_min:
        raise ValueError("t_max ({}) must exceed t_min ({})".format(t_max, t_min))
    if int(n_steps) != n_steps or n_steps < 2:
        raise ValueError("n_steps must be an integer >= 2, got {}".format(n_steps))
    if not rho > 0:
        raise ValueError("rho must be positive, got {}".format(rho))

    n_steps = int(n_steps)
    lo = t_min ** (1 / rho)
    hi = t_max ** (1 / rho)
    frac = np.arange(n_steps, dtype=np.float64) / (n_steps - 1)
    values = (lo + frac * (hi - lo)) ** rho
    values[0] = t_min
    values[-1] = t_max
    return TimeGrid(float(t_min), float(t_max), n_steps, float(rho),
                    _readonly(values))


def step_count(k, sched):
    """Return :math:`N(k) = \\min(s_0 2^{\\lfloor k/K' \\rfloor}, s_1) + 1`.

    Examples ::

        >>> step_count(0, StepSchedule(10, 1280, 800))
        11

    :raises ValueError: When ``k`` is outside ``[0, K)``.

    """
    if not 0 <= k < sched.total_iters:
        raise ValueError("Iteration {} outside [0, {})".format(
            k, sched.total_iters))
    doublings = k // sched.k_prime
    # past log2(s1/s0) doublings the min clamps anyway; avoid huge ints
    doublings = min(doublings, 64)
    return min(sched.s0 * 2 ** doublings, sched.s1) + 1


def noise_pmf(grid, p_mean=P_MEAN, p_std=P_STD):
    """Return the lognormal noise schedule over the grid's intervals.

    .. math::

        p(n) \\propto \\mathrm{erf}\\left(\\frac{\\log t_{n+1} -
        P_{mean}}{\\sqrt{2} P_{std}}\\right) - \\mathrm{erf}\\left(
        \\frac{\\log t_n - P_{mean}}{\\sqrt{2} P_{std}}\\right)

    ``erf`` is the platform libm routine exposed as :func:`math.erf`.

    """
    values = np.asarray(grid.values if isinstance(grid, TimeGrid) else grid)
    if values.size < 2:
        raise ValueError("A noise pmf needs at least two grid points.")
    if not p_std > 0:
        raise ValueError("P_std must be positive, got {}".format(p_std))
    scale = math.sqrt(2) * p_std
    cdf = np.array([math.erf((math.log(t) - p_mean) / scale) for t in values])
    probs = np.diff(cdf)
    probs = np.clip(probs, 0.0, None)
    total = probs.sum()
    if not total > 0:
        raise ValueError("Noise schedule has no mass on this grid.")
    return NoisePmf(_readonly(probs / total), float(p_mean), float(p_std))


def _check_pair_support(pmf):
    if np.count_nonzero(pmf.probs) < 2:
        raise ValueError("Noise pmf has a single nonzero entry; "
                         "no n' != n can be drawn.")


def sample_index_pairs(pmf, rng, size):
    """Draw ``size`` index pairs ``(n, n')`` with ``n' != n``.

    ``n`` follows :math:`p(n)`; ``n'`` follows :math:`p` with the
    entry at ``n`` removed and the rest renormalized, which is exactly
    what rejecting draws equal to ``n`` produces. Both indices range
    over the intervals ``1 .. N-1``, so :math:`t_{n'} < t_N`.

    :returns: Two int arrays of 1-based indices.
    :rtype: tuple

    """
    _check_pair_support(pmf)
    probs = pmf.probs
    n = rng.choice(len(probs), size=size, p=probs)
    n_prime = rng.choice(len(probs), size=size, p=probs)
    clash = n_prime == n
    while clash.any():
        n_prime[clash] = rng.choice(len(probs), size=int(clash.sum()), p=probs)
        clash = n_prime == n
    return n + 1, n_prime + 1


def sample_index_pair(pmf, rng):
    """Draw a single index pair ``(n, n')`` with ``n' != n``."""
    n, n_prime = sample_index_pairs(pmf, rng, 1)
    return int(n[0]), int(n_prime[0])


def weights(t_a, t_b):
    """Return the loss reweighting :math:`1 / |t_a - t_b|`.

    Examples ::

        >>> weights(1.0, 3.0)
        0.5

    :raises ValueError: When any pair of scales coincides.

    """
    gap = np.abs(np.subtract(t_a, t_b, dtype=np.float64))
    if np.any(gap == 0):
        raise ValueError("Loss weight undefined for equal noise scales.")
    result = 1.0 / gap
    if result.ndim == 0:
        return float(result)
    return result


def pair_coverage_pmf(grid, pmf):
    """Return the joint probability of drawing each ``(t_n, t_n')`` pair.

    Entry ``[i, j]`` is :math:`p(i+1)\\,\\tilde p(j+1 \\mid i+1)`; the
    diagonal is zero and row ``i`` sums to :math:`p(i+1)`.

    """
    probs = pmf.probs
    if len(probs) != len(grid) - 1:
        raise ValueError("Pmf has {} entries for a grid of {} points".format(
            len(probs), len(grid)))
    _check_pair_support(pmf)
    rest = 1.0 - probs
    joint = probs[:, None] * probs[None, :] / rest[:, None]
    np.fill_diagonal(joint, 0.0)
    return joint


def coverage_records(grid, joint):
    """Yield ``(n, n_prime, t_n, t_n_prime, prob)`` rows of a coverage
    matrix, the layout of the exported CSV."""
    size = joint.shape[0]
    for i in range(size):
        for j in range(size):
            yield (i + 1, j + 1, float(grid.values[i]), float(grid.values[j]),
                   float(joint[i, j]))


@functools.lru_cache(maxsize=32)
def _cached_grid(t_min, t_max, n_steps, rho):
    return build_grid(t_min, t_max, n_steps, rho)


@functools.lru_cache(maxsize=32)
def _cached_pmf(t_min, t_max, n_steps, rho, p_mean, p_std):
    return noise_pmf(_cached_grid(t_min, t_max, n_steps, rho), p_mean, p_std)


def train_grid(k, config):
    """Return the grid and noise pmf in force at training iteration ``k``.

    :param config: Anything exposing the TrainConfig schedule fields.

    :rtype: (TimeGrid, NoisePmf)

    """
    sched = StepSchedule(config.s0, config.s1, config.total_iters)
    n_steps = step_count(k, sched)
    key = (config.t_min, config.t_max, n_steps, config.rho)
    return (_cached_grid(*key),
            _cached_pmf(*key, config.p_mean, config.p_std))
