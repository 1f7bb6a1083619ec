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
"""Skip, output and input scalings of the consistency function.

The network :math:`F` is never asked for :math:`f` directly; instead

.. math::

    f(x_t, t, u) = c_{skip}(t, u)\\, x_t + c_{out}(t, u)\\,
    F(c_{in}(t)\\, x_t, t, u)

with coefficients chosen so that :math:`f(x, t, t) = x` holds exactly,
for any :math:`F`.

"""

from collections import namedtuple

import numpy as np

from .utils import as_batch, as_times

__all__ = ['CoeffTriple', 'coeffs', 'wrap_model', 'cm_coeffs',
           'cm_compat_gap', 'cout_squared', 'SIGMA_DATA']

SIGMA_DATA = 0.5

CoeffTriple = namedtuple('CoeffTriple', ['c_in', 'c_out', 'c_skip'])


def _check_sigma(sigma_data):
    if not sigma_data > 0:
        raise ValueError("sigma_data must be positive, got {}".format(sigma_data))


def _scalar_or_array(value):
    if np.ndim(value) == 0:
        return float(value)
    return value


def coeffs(t, u, sigma_data=SIGMA_DATA):
    """Return :math:`(c_{in}, c_{out}, c_{skip})` at ``(t, u)``.

    .. math::

        c_{in} = \\frac{1}{\\sqrt{\\sigma^2 + t^2}}, \\quad
        c_{out} = \\frac{\\sigma (t - u)}{\\sqrt{\\sigma^2 + t^2}}, \\quad
        c_{skip} = \\frac{\\sigma^2 + t u}{\\sigma^2 + t^2}

    ``t`` and ``u`` may be scalars or broadcastable arrays. At ``u == t``
    the numerator and denominator of :math:`c_{skip}` are the same
    floating point expression and :math:`c_{out}` carries the literal
    factor ``t - u``, so the boundary values 1 and 0 are exact.

    :raises ValueError: When ``sigma_data <= 0`` or a scale is negative.

    """
    _check_sigma(sigma_data)
    t = np.asarray(t, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    if np.any(t < 0) or np.any(u < 0):
        raise ValueError("Noise scales must be non-negative.")
    s2 = sigma_data * sigma_data
    denom = s2 + t * t
    root = np.sqrt(denom)
    c_in = 1.0 / root
    c_out = sigma_data * (t - u) / root
    c_skip = (s2 + t * u) / denom
    return CoeffTriple(_scalar_or_array(c_in), _scalar_or_array(c_out),
                       _scalar_or_array(c_skip))


def wrap_model(F, x_t, t, u, sigma_data=SIGMA_DATA):
    """Evaluate the consistency function built around a raw network.

    :param F: Callable ``F(x_in, t, u)`` taking a ``(B, d)`` batch and
        ``(B, 1)`` time columns, returning ``(B, d)``.

    :param x_t: State(s) at noise scale ``t``, shape ``(d,)`` or ``(B, d)``.

    :returns: :math:`c_{skip} x_t + c_{out} F(c_{in} x_t, t, u)` with the
        shape of ``x_t``.

    :raises ValueError: When ``F`` returns an array of another shape.

    """
    single = np.ndim(x_t) == 1
    x = as_batch(x_t)
    t_col = as_times(t, x.shape[0])
    u_col = as_times(u, x.shape[0])
    c_in, c_out, c_skip = coeffs(t_col, u_col, sigma_data)
    out = np.asarray(F(c_in * x, t_col, u_col), dtype=np.float64)
    if out.shape != x.shape:
        raise ValueError("Network output shape {} does not match input "
                         "shape {}".format(out.shape, x.shape))
    result = c_skip * x + c_out * out
    return result[0] if single else result


def cout_squared(c_skip, t, u, sigma_data=SIGMA_DATA):
    """Variance of the effective training target for a given ``c_skip``.

    .. math::

        c_{out}^2 = (\\sigma^2 + t^2) c_{skip}^2
        - 2 (\\sigma^2 + t u) c_{skip} + (\\sigma^2 + u^2)

    The parabola is minimized by the :func:`coeffs` choice of
    :math:`c_{skip}`, where it equals :math:`c_{out}^2`.

    """
    _check_sigma(sigma_data)
    s2 = sigma_data * sigma_data
    return ((s2 + t * t) * c_skip * c_skip
            - 2 * (s2 + t * u) * c_skip + (s2 + u * u))


def cm_coeffs(t, eps, sigma_data=SIGMA_DATA):
    """Return the single-target consistency-model coefficients.

    These have their boundary at ``eps``:
    :math:`c_{skip} = \\sigma^2 / (\\sigma^2 + (t - \\epsilon)^2)`,
    :math:`c_{out} = \\sigma (t - \\epsilon) / \\sqrt{\\sigma^2 + t^2}`.

    """
    _check_sigma(sigma_data)
    s2 = sigma_data * sigma_data
    root = np.sqrt(s2 + t * t)
    return CoeffTriple(_scalar_or_array(1.0 / root),
                       _scalar_or_array(sigma_data * (t - eps) / root),
                       _scalar_or_array(s2 / (s2 + (t - eps) ** 2)))


def cm_compat_gap(t, eps, sigma_data=SIGMA_DATA):
    """Return :math:`|c_{skip}(t, \\epsilon) - c^{CM}_{skip}(t)|`.

    The gap is bounded by :math:`\\epsilon / (2 \\sigma_{data})`, so
    targeting ``u = eps`` behaves like a one-way consistency model.

    :raises ValueError: When ``eps`` is not in ``(0, t)``.

    """
    t_arr = np.asarray(t, dtype=np.float64)
    if not eps > 0 or np.any(t_arr <= eps):
        raise ValueError("Need 0 < eps < t, got eps={}".format(eps))
    ours = coeffs(t_arr, eps, sigma_data).c_skip
    theirs = cm_coeffs(t_arr, eps, sigma_data).c_skip
    return _scalar_or_array(np.abs(np.subtract(ours, theirs)))
