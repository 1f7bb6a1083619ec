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
"""Distances between empirical distributions."""

import numpy as np

from ..pmath.utils import as_batch

__all__ = ['wasserstein_1d', 'sliced_wasserstein', 'random_directions',
           'moment_errors']


def wasserstein_1d(a, b):
    """Exact Wasserstein-1 distance between two 1-D empirical distributions.

    The samples may have different sizes; the distance is the integral
    of the absolute difference of the two quantile functions.

    Examples ::

        >>> wasserstein_1d([0.0, 1.0], [2.0, 3.0])
        2.0

    :raises ValueError: When either sample is empty.

    """
    a = np.sort(np.asarray(a, dtype=np.float64).ravel())
    b = np.sort(np.asarray(b, dtype=np.float64).ravel())
    if a.size == 0 or b.size == 0:
        raise ValueError("Can't compare empty samples.")
    breaks = np.union1d(np.arange(1, a.size + 1) / a.size,
                        np.arange(1, b.size + 1) / b.size)
    levels = np.concatenate([[0.0], breaks])
    widths = np.diff(levels)
    mids = levels[:-1] + 0.5 * widths
    ia = np.minimum(np.ceil(mids * a.size).astype(int) - 1, a.size - 1)
    ib = np.minimum(np.ceil(mids * b.size).astype(int) - 1, b.size - 1)
    return float(np.sum(widths * np.abs(a[ia] - b[ib])))


def random_directions(rng, n_projections, dim):
    """Unit vectors drawn uniformly on the sphere."""
    dirs = rng.standard_normal((n_projections, dim))
    return dirs / np.linalg.norm(dirs, axis=1, keepdims=True)


def _sorted_rows(x):
    # equal multisets project to bitwise equal values
    return x[np.lexsort(x.T[::-1])]


def sliced_wasserstein(a, b, n_projections=128, rng=None):
    """Mean 1-D Wasserstein-1 distance over random unit projections.

    Row order does not matter: equal multisets give exactly 0.

    :param rng: Source of projection directions; a fixed default stream
        when omitted.

    :raises ValueError: For mismatched dimensions or fewer than two
        samples on either side.

    """
    a = as_batch(a)
    b = as_batch(b)
    if a.shape[1] != b.shape[1]:
        raise ValueError("Sample dimensions differ: {} vs {}".format(
            a.shape[1], b.shape[1]))
    if len(a) < 2 or len(b) < 2:
        raise ValueError("Need at least two samples on each side.")
    if rng is None:
        rng = np.random.default_rng(0)
    dirs = random_directions(rng, n_projections, a.shape[1])
    pa = _sorted_rows(a) @ dirs.T
    pb = _sorted_rows(b) @ dirs.T
    return float(np.mean([wasserstein_1d(pa[:, i], pb[:, i])
                          for i in range(n_projections)]))


def moment_errors(samples, mean, cov):
    """Largest absolute mean error and largest relative covariance error."""
    samples = as_batch(samples)
    mean = np.asarray(mean, dtype=np.float64)
    cov = np.atleast_2d(np.asarray(cov, dtype=np.float64))
    mean_err = np.max(np.abs(samples.mean(axis=0) - mean))
    est = np.atleast_2d(np.cov(samples, rowvar=False))
    cov_err = np.max(np.abs(est - cov)) / np.max(np.abs(np.diag(cov)))
    return float(mean_err), float(cov_err)
