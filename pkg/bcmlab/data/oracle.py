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
"""Ground truth for the variance-exploding diffusion.

The forward process perturbs data as :math:`x_t = x + t z`; its
probability flow ODE is :math:`dx/dt = -t \\nabla \\log p_t(x)`.

"""

import logging

import numpy as np

from ..pmath.parameterization import SIGMA_DATA
from ..pmath.schedules import RHO
from ..pmath.utils import as_batch, as_times

__all__ = ['sde_perturb', 'brownian_pair', 'sde_pair', 'rho_steps',
           'pf_ode_solve', 'gaussian_flow_map', 'GaussianFlowModel',
           'OdeFlowModel']

logger = logging.getLogger(__name__)


def sde_perturb(x, t, z):
    """Return the VE-marginal sample :math:`x + t z`.

    :raises ValueError: When ``t`` is negative.

    """
    if np.any(np.asarray(t) < 0):
        raise ValueError("Noise scale must be nonnegative.")
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 2 and np.ndim(t) == 1:
        t = np.asarray(t, dtype=np.float64)[:, None]
    return x + t * np.asarray(z, dtype=np.float64)


def brownian_pair(x, t, u, z, xi):
    """Points at scales ``t`` and ``u`` on one Brownian path from ``x``.

    ``x_t = x + t z``. For ``u >= t`` the path continues with
    independent increments; for ``u < t`` the Brownian bridge between
    ``x`` and ``x_t`` is sampled.

    :returns: ``(x_t, x_u)``

    """
    x = as_batch(x)
    t = as_times(t, x.shape[0])
    u = as_times(u, x.shape[0])
    x_t = x + t * z
    later = u >= t
    grow = x_t + np.sqrt(np.where(later, u * u - t * t, 0.0)) * xi
    ratio = np.where(later, 0.0, (u * u) / np.where(t > 0, t * t, 1.0))
    spread = np.sqrt(np.where(later, 0.0, u * u * (1.0 - ratio)))
    shrink = x + ratio * (x_t - x) + spread * xi
    return x_t, np.where(later, grow, shrink)


def sde_pair(x, t, u, rng):
    """Draw a Brownian-coupled pair ``(x_t, x_u)``."""
    x = as_batch(x)
    z = rng.standard_normal(x.shape)
    xi = rng.standard_normal(x.shape)
    return brownian_pair(x, t, u, z, xi)


def rho_steps(t_from, t_to, n_steps, rho=RHO):
    """Substep times spaced uniformly in :math:`t^{1/\\rho}`, either
    direction, endpoints exact."""
    a = t_from ** (1.0 / rho)
    b = t_to ** (1.0 / rho)
    steps = (a + np.arange(n_steps + 1) / n_steps * (b - a)) ** rho
    steps[0] = t_from
    steps[-1] = t_to
    return steps


def pf_ode_solve(density, x_from, t_from, t_to, n_steps=256, rho=RHO,
                 trajectory=False):
    """Integrate the probability flow ODE with Heun's method.

    :param density: Anything with an analytic ``score(x, t)``.

    :param trajectory: Also return every substep as ``(t, x)`` pairs.

    :raises ValueError: For negative times or ``n_steps < 1``.

    Examples ::

        >>> g = single_gaussian()
        >>> pf_ode_solve(g, [1.0, 0.0], 2.0, 2.0)
        array([1., 0.])

    """
    if t_from < 0 or t_to < 0:
        raise ValueError("Noise scales must be nonnegative.")
    if n_steps < 1:
        raise ValueError("Need at least one step, got {}".format(n_steps))
    single = np.ndim(x_from) == 1
    x = as_batch(x_from).copy()
    path = [(t_from, x.copy())]
    if t_from != t_to:
        steps = rho_steps(t_from, t_to, n_steps, rho)
        for t_cur, t_next in zip(steps[:-1], steps[1:]):
            h = t_next - t_cur
            d_cur = -t_cur * density.score(x, t_cur)
            x_euler = x + h * d_cur
            d_next = -t_next * density.score(x_euler, t_next)
            x = x + 0.5 * h * (d_cur + d_next)
            if trajectory:
                path.append((t_next, x.copy()))
    result = x[0] if single else x
    if trajectory:
        return result, path
    return result


def gaussian_flow_map(mu, sigma_data, x_t, t, u):
    """Closed-form PF-ODE flow of a single isotropic Gaussian,
    :math:`\\mu + \\sqrt{(\\sigma^2 + u^2)/(\\sigma^2 + t^2)}\\,(x_t - \\mu)`.

    """
    if sigma_data <= 0:
        raise ValueError("sigma_data must be positive, got {}".format(sigma_data))
    x = np.asarray(x_t, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    if x.ndim == 2:
        t = t.reshape(-1, 1) if t.ndim else t
        u = u.reshape(-1, 1) if u.ndim else u
    s2 = sigma_data * sigma_data
    return mu + np.sqrt((s2 + u * u) / (s2 + t * t)) * (x - mu)


class GaussianFlowModel:
    """Exact consistency function for data ``N(mu, sigma_data^2 I)``."""

    def __init__(self, mu=None, sigma_data=SIGMA_DATA, dim=2):
        self.mu = np.zeros(dim) if mu is None else np.asarray(mu, dtype=np.float64)
        self.sigma_data = sigma_data
        self.dim = self.mu.shape[0]
        self.nfe = 0

    def __call__(self, x_t, t, u):
        self.nfe += 1
        return gaussian_flow_map(self.mu, self.sigma_data, x_t, t, u)


class OdeFlowModel:
    """Consistency function of any analytic density via :func:`pf_ode_solve`.

    Rows with distinct ``(t, u)`` are integrated separately.

    """

    def __init__(self, density, n_steps=128, rho=RHO, sigma_data=SIGMA_DATA):
        self.density = density
        self.n_steps = n_steps
        self.rho = rho
        self.sigma_data = sigma_data
        self.nfe = 0

    @property
    def dim(self):
        return self.density.dim

    def __call__(self, x_t, t, u):
        self.nfe += 1
        single = np.ndim(x_t) == 1
        x = as_batch(x_t)
        t_col = as_times(t, x.shape[0])[:, 0]
        u_col = as_times(u, x.shape[0])[:, 0]
        out = np.empty_like(x)
        pairs = np.stack([t_col, u_col], axis=1)
        for t_val, u_val in np.unique(pairs, axis=0):
            rows = (t_col == t_val) & (u_col == u_val)
            out[rows] = pf_ode_solve(self.density, x[rows], float(t_val),
                                     float(u_val), self.n_steps, self.rho)
        return out[0] if single else out
