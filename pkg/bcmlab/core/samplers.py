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
"""Generation with a bidirectional consistency model.

Every sampler only calls ``model(x, t, u)``, so trained models and the
exact oracle models of :mod:`bcmlab.data.oracle` are interchangeable.

"""

import logging
from dataclasses import dataclass, field

import numpy as np

from ..pmath.rand import random_stream, STREAM_SAMPLE
from ..pmath.schedules import T_MAX
from ..pmath.utils import as_batch

__all__ = ['SamplerPlan', 'Trajectory', 'SAMPLER_KINDS', 'NOISE_MODES',
           'PLAN_PRESETS', 'preset_plan', 'one_step', 'ancestral', 'zigzag',
           'combined', 'sample', 'draw_initial_noise']

logger = logging.getLogger(__name__)

SAMPLER_KINDS = ('one_step', 'ancestral', 'zigzag', 'combined')

# amplify: add eps-noise and let the network carry it to tau.
# fresh: add new noise of scale tau directly.
# fixed: re-add the initial noise rescaled to tau.
NOISE_MODES = ('amplify', 'fresh', 'fixed')


def _strictly(values, increasing):
    diffs = np.diff(np.asarray(values, dtype=np.float64))
    return bool(np.all(diffs > 0) if increasing else np.all(diffs < 0))


@dataclass
class SamplerPlan:
    """Time schedule for one of the four samplers.

    :param ancestral_times: Descending times starting at ``T``; ends at
        0 for ``ancestral`` and at the handoff ``t_1`` for ``combined``.

    :param zigzag_times: Increasing :math:`\\tau_1 < \\dots < \\tau_M`.

    :param fresh_noise_scales: :math:`\\varepsilon_1 \\dots
        \\varepsilon_{M-1}`, each below the matching :math:`\\tau`.

    :raises ValueError: When the schedule violates its kind's rules.

    """
    kind: str
    ancestral_times: list = field(default_factory=list)
    zigzag_times: list = field(default_factory=list)
    fresh_noise_scales: list = field(default_factory=list)
    seed: int = 0
    noise_mode: str = 'amplify'
    t_max: float = T_MAX

    def __post_init__(self):
        if self.kind not in SAMPLER_KINDS:
            raise ValueError("Unknown sampler kind '{}'".format(self.kind))
        if self.noise_mode not in NOISE_MODES:
            raise ValueError("Unknown noise mode '{}'".format(self.noise_mode))
        self.ancestral_times = [float(t) for t in self.ancestral_times]
        self.zigzag_times = [float(t) for t in self.zigzag_times]
        self.fresh_noise_scales = [float(e) for e in self.fresh_noise_scales]
        if self.kind == 'one_step':
            self.ancestral_times = [float(self.t_max), 0.0]
        if self.kind in ('ancestral', 'combined'):
            self._check_ancestral()
        if self.kind in ('zigzag', 'combined'):
            self._check_zigzag()
        if self.kind == 'combined' and \
                self.zigzag_times[-1] != self.ancestral_times[-1]:
            raise ValueError("Zigzag phase must start at the ancestral handoff "
                             "{}, got {}".format(self.ancestral_times[-1],
                                                 self.zigzag_times[-1]))

    def _check_ancestral(self):
        times = self.ancestral_times
        if len(times) < 2 or not _strictly(times, increasing=False):
            raise ValueError("Ancestral times must strictly decrease: "
                             "{}".format(times))
        if self.kind == 'ancestral' and times[-1] != 0:
            raise ValueError("Ancestral times must end at 0.")
        if self.kind == 'combined' and times[-1] <= 0:
            raise ValueError("Combined plans hand off at a positive time.")

    def _check_zigzag(self):
        taus = self.zigzag_times
        eps = self.fresh_noise_scales
        if not taus or taus[0] <= 0 or not _strictly(taus, increasing=True):
            raise ValueError("Zigzag times must be positive and strictly "
                             "increase: {}".format(taus))
        if len(eps) != len(taus) - 1:
            raise ValueError("Need {} noise scales for {} zigzag times, got "
                             "{}".format(len(taus) - 1, len(taus), len(eps)))
        for m, (e, tau) in enumerate(zip(eps, taus)):
            if not 0 <= e < tau:
                raise ValueError("Noise scale {} at step {} must lie in [0, "
                                 "{})".format(e, m + 1, tau))

    @property
    def start_time(self):
        if self.kind == 'zigzag':
            return self.zigzag_times[-1]
        return self.ancestral_times[0]

    @property
    def expected_nfe(self):
        count = 0
        if self.kind in ('one_step', 'ancestral', 'combined'):
            count += len(self.ancestral_times) - 1
        if self.kind in ('zigzag', 'combined'):
            per_step = 2 if self.noise_mode == 'amplify' else 1
            count += per_step * (len(self.zigzag_times) - 1) + 1
        return count


class Trajectory:
    """Ordered ``(time, state)`` pairs and the number of model calls."""

    def __init__(self, t, x):
        self.times = [float(t)]
        self.states = [np.array(x, dtype=np.float64)]
        self.nfe = 0

    def __len__(self):
        return len(self.times)

    def __iter__(self):
        return iter(zip(self.times, self.states))

    def __repr__(self):
        return "Trajectory(points={}, nfe={})".format(len(self), self.nfe)

    def append(self, t, x):
        self.times.append(float(t))
        self.states.append(x)

    def step(self, model, t, u):
        """Evaluate ``model`` on the latest state and record the result."""
        x = model(self.states[-1], t, u)
        self.nfe += 1
        self.append(u, x)
        return x

    @property
    def final(self):
        return self.states[-1]


def draw_initial_noise(plan, size, dim):
    """``x_T`` for ``size`` samples from the plan's seed."""
    rng = random_stream(plan.seed, STREAM_SAMPLE, 0)
    return plan.start_time * rng.standard_normal((size, dim))


def one_step(model, x_T, t_max=T_MAX):
    """Map noise at ``t_max`` straight to data: :math:`f(x_T, T, 0)`."""
    return model(x_T, float(t_max), 0.0)


def _run_ancestral(model, traj, times):
    for t_cur, t_next in zip(times[:-1], times[1:]):
        traj.step(model, t_cur, t_next)


def ancestral(model, plan, x_T):
    """Denoise down a descending time ladder.

    :rtype: Trajectory

    """
    if plan.kind not in ('ancestral', 'one_step'):
        raise ValueError("Plan kind '{}' is not ancestral".format(plan.kind))
    traj = Trajectory(plan.ancestral_times[0], x_T)
    _run_ancestral(model, traj, plan.ancestral_times)
    return traj


def _run_zigzag(model, traj, plan, rng, x_T):
    taus = plan.zigzag_times
    unit_noise = np.asarray(x_T, dtype=np.float64) / plan.start_time
    for m in range(len(taus) - 1, 0, -1):
        tau, tau_prev, eps = taus[m], taus[m - 1], plan.fresh_noise_scales[m - 1]
        x_hat = traj.step(model, tau, 0.0)
        if plan.noise_mode == 'amplify':
            sigma = rng.standard_normal(np.shape(x_hat))
            traj.append(eps, x_hat + eps * sigma)
            traj.step(model, eps, tau_prev)
        elif plan.noise_mode == 'fresh':
            sigma = rng.standard_normal(np.shape(x_hat))
            traj.append(tau_prev, x_hat + tau_prev * sigma)
        else:
            traj.append(tau_prev, x_hat + tau_prev * unit_noise)
    traj.step(model, taus[0], 0.0)


def zigzag(model, plan, x_T, rng=None):
    """Alternate full denoising with small noise injections.

    :param rng: Noise source; defaults to a stream derived from
        ``plan.seed``, independent of the initial noise.

    :rtype: Trajectory

    """
    if plan.kind != 'zigzag':
        raise ValueError("Plan kind '{}' is not zigzag".format(plan.kind))
    if rng is None:
        rng = random_stream(plan.seed, STREAM_SAMPLE, 1)
    traj = Trajectory(plan.zigzag_times[-1], x_T)
    _run_zigzag(model, traj, plan, rng, x_T)
    return traj


def combined(model, plan, x_T, rng=None):
    """Ancestral steps down to the handoff time, then zigzag refinement.

    :rtype: Trajectory

    """
    if plan.kind != 'combined':
        raise ValueError("Plan kind '{}' is not combined".format(plan.kind))
    if rng is None:
        rng = random_stream(plan.seed, STREAM_SAMPLE, 1)
    traj = Trajectory(plan.ancestral_times[0], x_T)
    _run_ancestral(model, traj, plan.ancestral_times)
    _run_zigzag(model, traj, plan, rng, x_T)
    return traj


def sample(model, plan, x_T=None, size=None):
    """Run ``plan`` from ``x_T`` (drawn from the plan's seed if omitted).

    :rtype: Trajectory

    """
    if x_T is None:
        if size is None:
            raise ValueError("Give either x_T or a sample count.")
        x_T = draw_initial_noise(plan, size, model.dim)
    x_T = as_batch(x_T)
    if plan.kind in ('one_step', 'ancestral'):
        traj = ancestral(model, plan, x_T)
    elif plan.kind == 'zigzag':
        traj = zigzag(model, plan, x_T)
    else:
        traj = combined(model, plan, x_T)
    logger.debug("%s sampler: %d points, NFE=%d", plan.kind, len(x_T), traj.nfe)
    return traj


PLAN_PRESETS = {
    'one_step': dict(kind='one_step'),
    'ancestral_nfe2': dict(kind='ancestral', ancestral_times=[T_MAX, 1.2, 0.0]),
    'zigzag_nfe3': dict(kind='zigzag', zigzag_times=[0.8, T_MAX],
                        fresh_noise_scales=[0.2]),
    'combined_nfe4': dict(kind='combined', ancestral_times=[T_MAX, 1.2],
                          zigzag_times=[0.3, 1.2], fresh_noise_scales=[0.1]),
}


def preset_plan(name, seed=0, noise_mode='amplify'):
    """Build one of :data:`PLAN_PRESETS`.

    :raises ValueError: For an unknown name.

    """
    try:
        options = PLAN_PRESETS[name]
    except KeyError:
        raise ValueError("Unknown sampler plan '{}'; choose from {}".format(
            name, ", ".join(PLAN_PRESETS)))
    return SamplerPlan(seed=seed, noise_mode=noise_mode, **options)
