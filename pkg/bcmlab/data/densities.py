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
"""Synthetic data densities with closed-form scores."""

import logging

import numpy as np

from ..pmath.parameterization import SIGMA_DATA
from ..pmath.utils import TWO_PI, PI, as_batch

__all__ = ['MixtureDensity', 'EmpiricalDensity', 'PRESETS', 'make_density',
           'single_gaussian', 'ring8', 'moons16']

logger = logging.getLogger(__name__)


class MixtureDensity:
    """A Gaussian mixture whose components share one diagonal covariance.

    :param weights: Component weights, positive.
    :type weights: array_like, shape ``(K,)``

    :param means: Component means.
    :type means: array_like, shape ``(K, d)``

    :param component_var: Per-dimension variance shared by all
        components (a scalar means isotropic).
    :type component_var: float or array_like, shape ``(d,)``

    :raises ValueError: For non-positive weights or variances, or
        mismatched shapes.

    """

    def __init__(self, weights, means, component_var):
        weights = np.asarray(weights, dtype=np.float64).ravel()
        means = as_batch(means)
        if weights.shape[0] != means.shape[0]:
            raise ValueError("Got {} weights for {} components".format(
                weights.shape[0], means.shape[0]))
        if np.any(weights <= 0):
            raise ValueError("Mixture weights must be positive.")
        var = np.broadcast_to(np.asarray(component_var, dtype=np.float64),
                              (means.shape[1],)).copy()
        if np.any(var <= 0):
            raise ValueError("Component variance must be positive.")
        self.weights = weights / weights.sum()
        self.means = means
        self.component_var = var

    def __repr__(self):
        return "MixtureDensity(components={}, dim={})".format(
            self.n_components, self.dim)

    @property
    def dim(self):
        return self.means.shape[1]

    @property
    def n_components(self):
        return self.means.shape[0]

    def mean(self):
        return self.weights @ self.means

    def variance(self):
        """Per-dimension variance of the mixture."""
        second = self.weights @ (self.means ** 2) + self.component_var
        return second - self.mean() ** 2

    def standardized(self, sigma_data=SIGMA_DATA):
        """Return the mixture centered at the origin with per-dimension
        standard deviation ``sigma_data``."""
        scale = sigma_data / np.sqrt(self.variance())
        return MixtureDensity(self.weights, (self.means - self.mean()) * scale,
                              self.component_var * scale ** 2)

    def sample(self, rng, size):
        """Draw ``size`` points.

        :rtype: np.ndarray, shape ``(size, d)``

        """
        comp = rng.choice(self.n_components, size=size, p=self.weights)
        noise = rng.standard_normal((size, self.dim))
        return self.means[comp] + np.sqrt(self.component_var) * noise

    def _log_components(self, x, t=0.0, coords=None):
        x = as_batch(x)
        var = self.component_var + float(t) ** 2
        means = self.means
        if coords is not None:
            x, var, means = x[:, coords], var[coords], means[:, coords]
        diff = x[:, None, :] - means[None, :, :]
        log_norm = -0.5 * np.sum(np.log(TWO_PI * var))
        return (np.log(self.weights)[None, :] + log_norm
                - 0.5 * np.sum(diff * diff / var, axis=2)), diff, var

    def log_prob(self, x, t=0.0):
        """Log density of the noise-perturbed marginal
        :math:`p_t = \\sum_i w_i \\mathcal{N}(\\mu_i, \\sigma_c^2 + t^2)`.

        """
        logs, _, _ = self._log_components(x, t)
        return np.logaddexp.reduce(logs, axis=1)

    def responsibilities(self, x, t=0.0, coords=None):
        logs, diff, var = self._log_components(x, t, coords)
        logs -= logs.max(axis=1, keepdims=True)
        resp = np.exp(logs)
        return resp / resp.sum(axis=1, keepdims=True), diff, var

    def score(self, x, t=0.0):
        """Analytic :math:`\\nabla_x \\log p_t(x)`.

        :raises ValueError: When ``t`` is negative.

        """
        if t < 0:
            raise ValueError("Noise scale must be nonnegative, got {}".format(t))
        single = np.ndim(x) == 1
        resp, diff, var = self.responsibilities(x, t)
        result = -np.einsum('bk,bkd->bd', resp, diff) / var
        return result[0] if single else result

    def conditional_mean(self, x, missing):
        """Expected value of the ``missing`` coordinates given the others.

        :param missing: Boolean or 0/1 vector, 1 marking unobserved.

        """
        missing = np.asarray(missing).astype(bool)
        observed = np.flatnonzero(~missing)
        if observed.size == 0:
            return np.tile(self.mean()[missing], (len(as_batch(x)), 1))
        resp, _, _ = self.responsibilities(x, 0.0, observed)
        return resp @ self.means[:, missing]


class EmpiricalDensity:
    """Uniform resampling of a fixed point cloud (for CSV datasets)."""

    def __init__(self, points):
        points = as_batch(points)
        if points.shape[0] < 2:
            raise ValueError("Need at least two data points.")
        self.points = points

    @property
    def dim(self):
        return self.points.shape[1]

    def sample(self, rng, size):
        return self.points[rng.integers(0, len(self.points), size=size)]

    def mean(self):
        return self.points.mean(axis=0)

    def variance(self):
        return self.points.var(axis=0)


def single_gaussian(sigma_data=SIGMA_DATA, dim=2):
    return MixtureDensity([1.0], np.zeros((1, dim)), 1.0).standardized(sigma_data)


def ring8(sigma_data=SIGMA_DATA, radius=1.0, spread=0.1):
    angles = TWO_PI * np.arange(8) / 8
    means = radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    return MixtureDensity(np.ones(8), means, spread ** 2).standardized(sigma_data)


def moons16(sigma_data=SIGMA_DATA, spread=0.1):
    """Two interleaved half circles, eight components each."""
    angles = PI * np.arange(8) / 7
    outer = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    inner = np.stack([1.0 - np.cos(angles), 0.5 - np.sin(angles)], axis=1)
    means = np.concatenate([outer, inner])
    return MixtureDensity(np.ones(16), means, spread ** 2).standardized(sigma_data)


PRESETS = {
    'single_gaussian': single_gaussian,
    'ring8': ring8,
    'moons16': moons16,
}


def make_density(name, sigma_data=SIGMA_DATA):
    """Resolve a preset name or the path of a CSV point cloud.

    :raises ValueError: For an unknown preset that is not a readable file.

    """
    if name in PRESETS:
        return PRESETS[name](sigma_data)
    if name.endswith('.csv'):
        from ..io.tables import read_matrix
        points = read_matrix(name)
        logger.info("Loaded %d points from %s", len(points), name)
        return EmpiricalDensity(points)
    raise ValueError("Unknown dataset '{}'; expected one of {} or a .csv "
                     "path".format(name, ", ".join(sorted(PRESETS))))
