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
"""Inversion and the applications built on it: reconstruction,
interpolation between two data points, and inpainting."""

import hashlib
import logging
from dataclasses import dataclass, field

import numpy as np

from ..pmath.rand import random_stream, STREAM_INVERT
from ..pmath.schedules import T_MAX
from ..pmath.utils import as_batch, normalize, slerp
from .samplers import Trajectory, sample

__all__ = ['InversionPlan', 'Mask', 'LADDERS', 'INPAINT_SCALE', 'ladder_plan',
           'parse_ladder', 'invert', 'reconstruct', 'roundtrip_mse',
           'slerp_interpolate', 'inpaint', 'keyed_noise']

logger = logging.getLogger(__name__)

LADDERS = {
    'nfe1': [0.07, 80.0],
    'nfe2': [0.07, 6.0, 80.0],
    'nfe3': [0.07, 1.5, 6.0, 80.0],
    'nfe4': [0.07, 1.5, 4.0, 10.0, 80.0],
    'inpaint': [0.07, 0.4, 1.0, 2.0],
}

INPAINT_SCALE = 0.5


@dataclass
class InversionPlan:
    """Increasing noise ladder :math:`\\varepsilon = t_1 < \\dots < t_N \\le T`.

    The first rung is the scale of the noise added to the data before
    the first network call; a ladder starting at 0 adds none.

    """
    times: list
    seed: int = 0
    t_max: float = T_MAX

    def __post_init__(self):
        self.times = [float(t) for t in self.times]
        times = self.times
        if len(times) < 2:
            raise ValueError("An inversion ladder needs at least two times.")
        if times[0] < 0 or np.any(np.diff(times) <= 0):
            raise ValueError("Inversion times must be nonnegative and strictly "
                             "increase: {}".format(times))
        if times[-1] > self.t_max:
            raise ValueError("Last inversion time {} exceeds T={}".format(
                times[-1], self.t_max))

    @property
    def eps(self):
        return self.times[0]

    @property
    def end_time(self):
        return self.times[-1]

    @property
    def nfe(self):
        return len(self.times) - 1


@dataclass
class Mask:
    """Coordinates to inpaint (1 = missing) and the initial noise scale."""
    missing: np.ndarray
    init_scale: float = INPAINT_SCALE

    def __post_init__(self):
        values = np.asarray(self.missing, dtype=np.float64).ravel()
        if not np.all((values == 0) | (values == 1)):
            raise ValueError("Mask entries must be 0 or 1.")
        if values.size and np.all(values == 1):
            raise ValueError("Mask hides every coordinate; nothing observed.")
        self.missing = values.astype(bool)

    def hide(self, x):
        """Zero the missing coordinates."""
        return np.where(self.missing, 0.0, np.asarray(x, dtype=np.float64))


def ladder_plan(name, seed=0):
    """Build an :class:`InversionPlan` from a name in :data:`LADDERS`."""
    try:
        return InversionPlan(LADDERS[name], seed)
    except KeyError:
        raise ValueError("Unknown ladder '{}'; choose from {}".format(
            name, ", ".join(LADDERS)))


def parse_ladder(text, seed=0):
    """Accept a ladder name or comma-separated times such as
    ``"0.07,6.0,80"``."""
    if text in LADDERS:
        return ladder_plan(text, seed)
    try:
        times = [float(v) for v in text.split(',')]
    except ValueError:
        raise ValueError("Can't parse ladder '{}'".format(text))
    return InversionPlan(times, seed)


def invert(model, plan, x0, noise=None, rng=None):
    """Map data to noise at ``plan.end_time`` along the ladder.

    :param noise: Standard normal draw for the initial perturbation;
        drawn from ``rng`` (or the plan's seed) when omitted.

    :returns: The trajectory; ``.final`` is the noise vector and
        ``.nfe == len(plan.times) - 1``.
    :rtype: Trajectory

    """
    x0 = np.asarray(x0, dtype=np.float64)
    if noise is None:
        if rng is None:
            rng = random_stream(plan.seed, STREAM_INVERT, 0)
        noise = rng.standard_normal(x0.shape)
    traj = Trajectory(plan.eps, x0 + plan.eps * noise)
    for t_cur, t_next in zip(plan.times[:-1], plan.times[1:]):
        traj.step(model, t_cur, t_next)
    return traj


def reconstruct(model, plan, x0, gen_plan=None, noise=None, rng=None):
    """Invert ``x0`` and generate back.

    Without ``gen_plan`` the way back is a single step from the top of
    the ladder; otherwise ``gen_plan`` must start where the ladder ends.

    """
    inverted = invert(model, plan, x0, noise, rng).final
    if gen_plan is None:
        return model(inverted, plan.end_time, 0.0)
    if gen_plan.start_time != plan.end_time:
        raise ValueError("Generation starts at {} but the ladder ends at "
                         "{}".format(gen_plan.start_time, plan.end_time))
    return sample(model, gen_plan, inverted).final


def keyed_noise(seed, x0):
    """Per-row standard normals keyed on the row's bytes.

    The same row gets the same noise wherever it appears, so results
    do not depend on row order, and distinct rows draw from
    independent streams.

    """
    noise = np.empty_like(x0)
    for i, row in enumerate(x0):
        key = int.from_bytes(hashlib.sha256(row.tobytes()).digest()[:8], 'little')
        noise[i] = random_stream(seed, STREAM_INVERT, 1, key).standard_normal(
            row.shape)
    return noise


def roundtrip_mse(model, inv_plan, gen_plan, samples, data_range=None):
    """Per-dimension MSE between samples and their reconstructions.

    Each dimension is first mapped affinely to ``[0, 1]`` using
    ``data_range`` (``(low, high)`` vectors; the sample min/max when
    omitted).

    :raises ValueError: For an empty sample set.

    """
    x0 = np.asarray(samples, dtype=np.float64)
    if x0.size == 0:
        raise ValueError("Need at least one sample for a roundtrip MSE.")
    x0 = as_batch(x0)
    if data_range is None:
        low, high = x0.min(axis=0), x0.max(axis=0)
    else:
        low, high = (np.asarray(v, dtype=np.float64) for v in data_range)
    noise = keyed_noise(inv_plan.seed, x0)
    x_hat = as_batch(reconstruct(model, inv_plan, x0, gen_plan, noise))
    mse = float(np.mean((normalize(x_hat, low, high)
                         - normalize(x0, low, high)) ** 2))
    logger.debug("roundtrip over %d samples, ladder %s: mse=%.3e", len(x0),
                 inv_plan.times, mse)
    return mse


def slerp_interpolate(model, x_a, x_b, alphas, inv_plan):
    """Invert two points and decode spherical interpolants of their
    latents.

    The initial noise of each endpoint is :func:`keyed_noise` of that
    point, the same draw :func:`roundtrip_mse` uses, so ``alphas`` of 0
    and 1 give back the roundtrip reconstructions of ``x_a`` and ``x_b``.

    :returns: One data vector per entry of ``alphas``.
    :rtype: list

    :raises ValueError: When the two points coincide or their latents
        are antiparallel.

    """
    x_a = np.asarray(x_a, dtype=np.float64)
    x_b = np.asarray(x_b, dtype=np.float64)
    if np.array_equal(x_a, x_b):
        raise ValueError("Interpolation endpoints must differ.")
    noise = keyed_noise(inv_plan.seed, np.stack([x_a, x_b]))
    z1 = invert(model, inv_plan, x_a, noise[0]).final
    z2 = invert(model, inv_plan, x_b, noise[1]).final
    return [model(slerp(z1, z2, alpha), inv_plan.end_time, 0.0)
            for alpha in alphas]


def inpaint(model, x_masked, mask, inv_plan, rng=None):
    """Fill the missing coordinates of ``x_masked``.

    Missing coordinates start as ``init_scale`` noise, are re-drawn at
    the current noise level after every inversion step, and are decoded
    in one step at the top of the ladder. Observed coordinates of the
    result are copied from the input.

    """
    x_in = np.asarray(x_masked, dtype=np.float64)
    if x_in.shape[-1] != mask.missing.shape[0]:
        raise ValueError("Mask has {} entries for vectors of size {}".format(
            mask.missing.shape[0], x_in.shape[-1]))
    if rng is None:
        rng = random_stream(inv_plan.seed, STREAM_INVERT, 3)
    hidden = mask.hide(x_in)
    start = np.where(mask.missing, mask.init_scale *
                     rng.standard_normal(x_in.shape), hidden)
    x = start + inv_plan.eps * rng.standard_normal(x_in.shape)
    times = inv_plan.times
    for t_cur, t_next in zip(times[:-1], times[1:]):
        x = model(x, t_cur, t_next)
        x = np.where(mask.missing, t_next * rng.standard_normal(x_in.shape), x)
    x0 = model(x, inv_plan.end_time, 0.0)
    return np.where(mask.missing, x0, x_in)
