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
"""A small fully connected network with reverse-mode differentiation.

The raw network :math:`F(x, t, u)` embeds both noise scales with fixed
Fourier features of a log-time coordinate, projects the concatenated
embedding through one dense layer and feeds it, next to the scaled
state, through a stack of SiLU layers. :class:`ConsistencyModel` wraps
it into the consistency function.

Gradients are computed by hand. Every forward pass that should be
differentiated is recorded on a :class:`GradientTape`; ``backward``
pops the most recent record, so calls must be undone in reverse order
(as reverse mode requires anyway).

"""

import math
from collections import OrderedDict, namedtuple
from dataclasses import dataclass, asdict

import numpy as np

from ..pmath.parameterization import coeffs, wrap_model, SIGMA_DATA
from ..pmath.rand import random_stream, STREAM_INIT
from ..pmath.utils import as_batch, as_times

__all__ = ['ArchSpec', 'TimeEmbedding', 'ModelParams', 'GradientTape',
           'ConsistencyModel', 'param_shapes', 'init_params',
           'embed_times', 'forward', 'backward', 'silu']

# Floor added inside the log-time coordinate so that u = 0 is admissible.
TIME_FLOOR = 1e-8

ACTIVATIONS = ('silu',)


@dataclass(frozen=True)
class ArchSpec:
    """Architecture descriptor; fully determines all parameter shapes."""
    dim: int = 2
    hidden_width: int = 128
    hidden_depth: int = 3
    n_freqs: int = 16
    emb_dim: int = 64
    freq_scale: float = 1.0
    activation: str = 'silu'

    def __post_init__(self):
        if self.dim < 1 or self.hidden_width < 1 or self.hidden_depth < 1:
            raise ValueError("Invalid architecture {}".format(self))
        if self.n_freqs < 1 or self.emb_dim < 1:
            raise ValueError("Invalid embedding size in {}".format(self))
        if self.activation not in ACTIVATIONS:
            raise ValueError("Unknown activation '{}'".format(self.activation))

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


@dataclass(frozen=True)
class TimeEmbedding:
    """Sine/cosine features of :math:`g(t) = \\tfrac14 \\log(1 + t/10^{-8})`.

    ``g`` is a shifted log time with :math:`g(0) = 0`, so the embedding
    of ``t = 0`` has all cosine channels at 1 and all sine channels at 0.

    """
    n_freqs: int = 16
    scale: float = 1.0

    @property
    def frequencies(self):
        return self.scale * np.geomspace(1.0 / 32.0, 2.0, self.n_freqs)

    def __call__(self, t):
        t = np.asarray(t, dtype=np.float64).reshape(-1, 1)
        g = 0.25 * np.log1p(t / TIME_FLOOR)
        angles = 2 * math.pi * g * self.frequencies[None, :]
        return np.concatenate([np.sin(angles), np.cos(angles)], axis=1)


def embed_times(t, u, emb):
    """Concatenate the embeddings of ``t`` and ``u``.

    :returns: Array of shape ``(B, 4 * n_freqs)`` (``B = 1`` for scalars).

    :raises ValueError: When a scale is negative.

    """
    if np.any(np.asarray(t) < 0) or np.any(np.asarray(u) < 0):
        raise ValueError("Noise scales must be non-negative.")
    return np.concatenate([emb(t), emb(u)], axis=1)


def param_shapes(arch):
    """Return the ordered ``name -> shape`` map for an architecture."""
    shapes = OrderedDict()
    shapes['emb.W'] = (4 * arch.n_freqs, arch.emb_dim)
    shapes['emb.b'] = (arch.emb_dim,)
    fan_in = arch.dim + arch.emb_dim
    for i in range(arch.hidden_depth):
        shapes['h{}.W'.format(i)] = (fan_in, arch.hidden_width)
        shapes['h{}.b'.format(i)] = (arch.hidden_width,)
        fan_in = arch.hidden_width
    shapes['out.W'] = (fan_in, arch.dim)
    shapes['out.b'] = (arch.dim,)
    return shapes


class ModelParams:
    """All trainable weights of the network plus :math:`\\sigma_{data}`.

    :param arch: The architecture the arrays belong to.
    :type arch: ArchSpec

    :param arrays: ``name -> array`` in :func:`param_shapes` order.
    :type arrays: OrderedDict

    :param sigma_data: Data scale used by the wrapper coefficients.
    :type sigma_data: float

    """

    def __init__(self, arch, arrays, sigma_data=SIGMA_DATA):
        if not sigma_data > 0:
            raise ValueError("sigma_data must be positive")
        shapes = param_shapes(arch)
        if list(arrays) != list(shapes):
            raise ValueError("Parameter names {} do not match architecture "
                             "{}".format(list(arrays), list(shapes)))
        for name, shape in shapes.items():
            if arrays[name].shape != shape:
                raise ValueError("Parameter {} has shape {}, expected {}".format(
                    name, arrays[name].shape, shape))
        self.arch = arch
        self.sigma_data = float(sigma_data)
        self.arrays = OrderedDict(
            (k, np.asarray(v, dtype=np.float64)) for k, v in arrays.items())
        self.embedding = TimeEmbedding(arch.n_freqs, arch.freq_scale)

    def __getitem__(self, name):
        return self.arrays[name]

    def __iter__(self):
        return iter(self.arrays)

    def items(self):
        return self.arrays.items()

    def copy(self):
        return ModelParams(self.arch, OrderedDict(
            (k, v.copy()) for k, v in self.arrays.items()), self.sigma_data)

    def is_finite(self):
        return all(np.all(np.isfinite(v)) for v in self.arrays.values())

    def num_params(self):
        return sum(v.size for v in self.arrays.values())

    def as_vector(self):
        return np.concatenate([v.ravel() for v in self.arrays.values()])

    def load_vector(self, vector):
        """Overwrite all arrays in place from a flat vector."""
        offset = 0
        for name, value in self.arrays.items():
            value[...] = vector[offset:offset + value.size].reshape(value.shape)
            offset += value.size
        if offset != vector.size:
            raise ValueError("Vector has {} entries, model has {}".format(
                vector.size, offset))


def init_params(arch, sigma_data=SIGMA_DATA, seed=0):
    """Initialize parameters with fan-in scaled normals.

    The output layer starts at zero, so the wrapped model is
    :math:`f(x, t, u) = c_{skip}(t, u)\\, x` before any training.

    """
    rng = random_stream(seed, STREAM_INIT)
    arrays = OrderedDict()
    for name, shape in param_shapes(arch).items():
        if name.startswith('out.') or name.endswith('.b'):
            arrays[name] = np.zeros(shape)
        else:
            arrays[name] = rng.standard_normal(shape) / math.sqrt(shape[0])
    return ModelParams(arch, arrays, sigma_data)


def silu(z):
    return z * _sigmoid(z)


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _silu_grad(z):
    s = _sigmoid(z)
    return s * (1.0 + z * (1.0 - s))


_DenseRecord = namedtuple('_DenseRecord', ['emb', 'emb_pre', 'inputs',
                                           'pre', 'stop_gradient'])
_WrapRecord = namedtuple('_WrapRecord', ['c_in', 'c_out', 'c_skip'])


class GradientTape:
    """Per-parameter gradient accumulators plus a stack of forward records.

    Each training worker owns a private tape; tapes are merged by
    summation with :meth:`merge` before the optimizer step.

    """

    def __init__(self, params):
        self.grads = OrderedDict(
            (name, np.zeros_like(value)) for name, value in params.items())
        self._records = []

    def __getitem__(self, name):
        return self.grads[name]

    def __len__(self):
        return len(self._records)

    def push(self, record):
        self._records.append(record)

    def pop(self, kind):
        if not self._records:
            raise RuntimeError("backward called without a recorded forward pass")
        record = self._records.pop()
        if not isinstance(record, kind):
            raise RuntimeError("Tape out of order: expected {}, found {}".format(
                kind.__name__, type(record).__name__))
        return record

    def zero(self):
        for value in self.grads.values():
            value[...] = 0.0
        self._records.clear()

    def merge(self, other):
        """Add another tape's gradients into this one."""
        for name, value in other.grads.items():
            self.grads[name] += value
        return self

    def as_vector(self):
        return np.concatenate([v.ravel() for v in self.grads.values()])


def forward(params, x, t, u, tape=None, stop_gradient=False):
    """Evaluate the raw network :math:`F(x, t, u)`.

    :param x: Network input (already scaled by :math:`c_{in}`), shape
        ``(B, d)``.

    :param t: Source noise scale(s), scalar or length ``B``.

    :param u: Target noise scale(s), scalar or length ``B``.

    :param tape: When given, activations are recorded for :func:`backward`.

    :param stop_gradient: Record the pass so that input gradients flow
        but no parameter gradient is accumulated.

    :returns: Output of shape ``(B, d)``.

    :raises ValueError: When ``x`` does not have ``arch.dim`` columns.

    """
    x = as_batch(x)
    arch = params.arch
    if x.shape[1] != arch.dim:
        raise ValueError("Input has {} columns, network expects {}".format(
            x.shape[1], arch.dim))
    batch = x.shape[0]
    t_col = as_times(t, batch)
    u_col = as_times(u, batch)

    emb = embed_times(t_col, u_col, params.embedding)
    emb_pre = emb @ params['emb.W'] + params['emb.b']
    h = np.concatenate([x, silu(emb_pre)], axis=1)

    inputs = []
    pre = []
    for i in range(arch.hidden_depth):
        inputs.append(h)
        z = h @ params['h{}.W'.format(i)] + params['h{}.b'.format(i)]
        pre.append(z)
        h = silu(z)
    inputs.append(h)
    out = h @ params['out.W'] + params['out.b']

    if tape is not None:
        tape.push(_DenseRecord(emb, emb_pre, inputs, pre, stop_gradient))
    return out


def backward(params, tape, upstream):
    """Back-propagate ``upstream = dL/dF`` through the latest recorded pass.

    Parameter gradients are added into ``tape`` unless the pass was
    recorded with ``stop_gradient``.

    :returns: ``dL/dx`` for the network input, shape ``(B, d)``.

    :raises RuntimeError: When no forward pass is left on the tape.

    """
    record = tape.pop(_DenseRecord)
    arch = params.arch
    grads = None if record.stop_gradient else tape.grads
    g = np.asarray(upstream, dtype=np.float64)

    h = record.inputs[-1]
    if grads is not None:
        grads['out.W'] += h.T @ g
        grads['out.b'] += g.sum(axis=0)
    g = g @ params['out.W'].T

    for i in reversed(range(arch.hidden_depth)):
        gz = g * _silu_grad(record.pre[i])
        if grads is not None:
            grads['h{}.W'.format(i)] += record.inputs[i].T @ gz
            grads['h{}.b'.format(i)] += gz.sum(axis=0)
        g = gz @ params['h{}.W'.format(i)].T

    g_x = g[:, :arch.dim]
    if grads is not None:
        g_emb = g[:, arch.dim:] * _silu_grad(record.emb_pre)
        grads['emb.W'] += record.emb.T @ g_emb
        grads['emb.b'] += g_emb.sum(axis=0)
    return g_x


class ConsistencyModel:
    """The consistency function :math:`f_\\theta(x_t, t, u)`.

    Calling the model evaluates it without recording anything; use
    :meth:`apply` and :meth:`backward` inside training.

    :param params: Network weights (the EMA copy for inference).
    :type params: ModelParams

    """

    def __init__(self, params):
        self.params = params

    @property
    def dim(self):
        return self.params.arch.dim

    @property
    def sigma_data(self):
        return self.params.sigma_data

    def __call__(self, x_t, t, u):
        def raw(x, t_col, u_col):
            return forward(self.params, x, t_col, u_col)
        return wrap_model(raw, x_t, t, u, self.params.sigma_data)

    def apply(self, x_t, t, u, tape=None, stop_gradient=False):
        """Evaluate :math:`f` on a batch, optionally recording on ``tape``."""
        x = as_batch(x_t)
        batch = x.shape[0]
        t_col = as_times(t, batch)
        u_col = as_times(u, batch)
        c_in, c_out, c_skip = coeffs(t_col, u_col, self.params.sigma_data)
        out = forward(self.params, c_in * x, t_col, u_col, tape, stop_gradient)
        if tape is not None:
            tape.push(_WrapRecord(c_in, c_out, c_skip))
        return c_skip * x + c_out * out

    def backward(self, tape, upstream):
        """Return ``dL/dx_t`` for the latest :meth:`apply` on ``tape``."""
        record = tape.pop(_WrapRecord)
        g_in = backward(self.params, tape, record.c_out * upstream)
        return record.c_skip * upstream + record.c_in * g_in
