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
"""General purpose math utility functions.

All functions accept numpy arrays; vectors are stored row-wise, so a
batch of ``B`` points in ``d`` dimensions is a ``(B, d)`` array.

"""

import math

import numpy as np

__all__ = [
    # CONSTANTS
    'PI', 'TWO_PI',

    # INTERPOLATION
    'normalize', 'slerp',

    # NORMS
    'magnitude',

    # SHAPE HELPERS
    'as_batch', 'as_times',
]

PI = math.pi
TWO_PI = 2 * math.pi

# Below this sin(psi) two directions count as (anti)parallel.
SLERP_EPSILON = 1e-7


def as_batch(x):
    """Return ``x`` as a 2D float64 array of row vectors.

    A single vector of shape ``(d,)`` becomes ``(1, d)``.

    :raises ValueError: When ``x`` has more than two dimensions.

    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        return x[None, :]
    if x.ndim != 2:
        raise ValueError("Expected a vector or a batch of vectors, "
                         "got shape {}".format(x.shape))
    return x


def as_times(t, batch_size):
    """Broadcast a scalar or per-row noise scale to shape ``(B, 1)``."""
    t = np.asarray(t, dtype=np.float64)
    if t.ndim == 0:
        return np.full((batch_size, 1), float(t))
    t = t.reshape(-1, 1)
    if t.shape[0] != batch_size:
        raise ValueError("Got {} times for a batch of {}".format(
            t.shape[0], batch_size))
    return t


def normalize(value, low, high):
    """Normalize the given value to the unit range.

    Columns whose range is empty are left centred at zero instead of
    dividing by zero.

    Examples ::

        >>> normalize(10, 0, 100)
        0.1

        >>> normalize(1, 1, 15)
        0.0

    :param value:
    :type value: float or np.ndarray

    :param low: The lower bound for the range.
    :type low: float or np.ndarray

    :param high: The upper bound for the range.
    :type high: float or np.ndarray
    """
    low = np.asarray(low, dtype=np.float64)
    high = np.asarray(high, dtype=np.float64)
    span = np.where(high > low, high - low, 1.0)
    result = (np.asarray(value, dtype=np.float64) - low) / span
    if result.ndim == 0:
        return float(result)
    return result


def magnitude(x):
    """Return the Euclidean norm of each row of ``x``.

    Examples ::

        >>> magnitude(np.array([3.0, 4.0]))
        5.0

    """
    x = np.asarray(x, dtype=np.float64)
    result = np.sqrt(np.sum(x ** 2, axis=-1))
    if result.ndim == 0:
        return float(result)
    return result


def slerp(z1, z2, alpha):
    """Spherically interpolate between two vectors.

    With :math:`\\psi` the angle between ``z1`` and ``z2``, returns

    .. math::

        \\frac{\\sin((1-\\alpha)\\psi)}{\\sin\\psi} z_1 +
        \\frac{\\sin(\\alpha\\psi)}{\\sin\\psi} z_2

    so the endpoints are reproduced exactly and equal-norm inputs keep
    their norm along the whole path.

    Examples ::

        >>> slerp(np.array([1.0, 0.0]), np.array([0.0, 1.0]), 0.5)
        array([0.70710678, 0.70710678])

    :param z1: Start vector, shape ``(d,)``.
    :type z1: np.ndarray

    :param z2: End vector, shape ``(d,)``.
    :type z2: np.ndarray

    :param alpha: Interpolation amount in :math:`[0, 1]`.
    :type alpha: float

    :raises ValueError: When the vectors are parallel or antiparallel
        (the great circle through them is not unique), or when one of
        them is zero.

    """
    z1 = np.asarray(z1, dtype=np.float64)
    z2 = np.asarray(z2, dtype=np.float64)
    n1 = magnitude(z1)
    n2 = magnitude(z2)
    if n1 == 0 or n2 == 0:
        raise ValueError("Can't interpolate spherically from a zero vector.")

    cos_psi = np.clip(np.dot(z1, z2) / (n1 * n2), -1.0, 1.0)
    psi = math.acos(cos_psi)
    sin_psi = math.sin(psi)
    if sin_psi < SLERP_EPSILON:
        raise ValueError("Vectors are (anti)parallel; sin(psi) = {:.3g}".format(
            sin_psi))

    if alpha == 0:
        return z1.copy()
    if alpha == 1:
        return z2.copy()
    w1 = math.sin((1 - alpha) * psi) / sin_psi
    w2 = math.sin(alpha * psi) / sin_psi
    return w1 * z1 + w2 * z2

