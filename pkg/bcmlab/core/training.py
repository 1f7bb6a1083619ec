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
"""Bidirectional consistency training.

One iteration draws a batch of data, noise and index pairs, evaluates
the consistency-training term and the soft trajectory term, takes an
Adam step and updates the EMA shadow of the weights.

"""

import logging
import math
import os
import tempfile
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields

import numpy as np
from tqdm import tqdm

from ..data.oracle import brownian_pair
from ..errors import ConfigError, NumericAbort
from ..pmath.rand import random_stream, STREAM_TRAIN
from ..pmath.schedules import sample_index_pairs, train_grid, weights
from ..pmath.utils import as_batch
from .network import ArchSpec, ConsistencyModel, GradientTape, init_params

__all__ = ['TrainConfig', 'LossBreakdown', 'TrainBatch', 'TrainState',
           'TrainResult', 'LOSS_VARIANTS', 'pseudo_huber', 'ct_loss',
           'st_loss', 'bct_terms', 'draw_batch', 'init_state', 'train_step',
           'ema_update', 'run_training', 'worker_count']

logger = logging.getLogger(__name__)

FULL_BCT = 'full-BCT'
EQ14_ABLATION = 'eq14-ablation'
NO_CT_ABLATION = 'no-CT-ablation'
LOSS_VARIANTS = (FULL_BCT, EQ14_ABLATION, NO_CT_ABLATION)

HUBER_C_FACTOR = 0.00054

THREADS_ENV = 'BCM_LAB_THREADS'


@dataclass
class TrainConfig:
    """Every training hyperparameter.

    ``total_iters``, ``batch_size`` and ``seed`` have no default; all
    other values default to the large-scale settings (toy runs usually
    override ``mu_ema`` and ``lr``).

    """
    total_iters: int
    batch_size: int
    seed: int
    lr: float = 1e-4
    warmup_iters: int = 100
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    s0: int = 10
    s1: int = 1280
    p_mean: float = -1.1
    p_std: float = 2.0
    mu_ema: float = 0.99993
    huber_c_factor: float = HUBER_C_FACTOR
    sigma_data: float = 0.5
    t_min: float = 0.002
    t_max: float = 80.0
    rho: float = 7.0
    loss_variant: str = FULL_BCT
    dataset: str = 'single_gaussian'
    hidden_width: int = 128
    hidden_depth: int = 3
    n_freqs: int = 16
    emb_dim: int = 64
    freq_scale: float = 1.0
    shard_size: int = 64
    log_every: int = 500
    progress: bool = True
    # set by the caller once the dataset is known
    data_dim: int = 2

    def __post_init__(self):
        problems = []
        if self.total_iters < 0:
            problems.append('total_iters')
        if self.batch_size < 2:
            problems.append('batch_size')
        if self.seed < 0:
            problems.append('seed')
        for name in ('lr', 'sigma_data', 't_min', 't_max', 'rho', 'p_std',
                     'huber_c_factor', 'freq_scale'):
            value = getattr(self, name)
            if name == 'lr':
                if value < 0:
                    problems.append(name)
            elif not value > 0:
                problems.append(name)
        if self.t_max <= self.t_min:
            problems.append('t_max')
        if not 0 <= self.mu_ema < 1:
            problems.append('mu_ema')
        if self.loss_variant not in LOSS_VARIANTS:
            problems.append('loss_variant')
        if self.shard_size < 1:
            problems.append('shard_size')
        if problems:
            raise ConfigError("Invalid training config values", problems)

    @property
    def arch(self):
        return ArchSpec(dim=self.data_dim, hidden_width=self.hidden_width,
                        hidden_depth=self.hidden_depth, n_freqs=self.n_freqs,
                        emb_dim=self.emb_dim, freq_scale=self.freq_scale)

    def to_dict(self):
        return OrderedDict((f.name, getattr(self, f.name)) for f in fields(self))


@dataclass
class LossBreakdown:
    """Batch means of the two loss terms and the optimized total.

    ``ct_term`` is reported for every variant, including the one that
    does not optimize it.

    """
    ct_term: float
    st_term: float
    total: float

    @property
    def bct_value(self):
        return self.ct_term + self.st_term


@dataclass
class TrainBatch:
    """Everything random about one iteration."""
    x: np.ndarray
    z: np.ndarray
    xi: np.ndarray
    n: np.ndarray
    n_prime: np.ndarray
    t_n: np.ndarray
    t_n1: np.ndarray
    t_np: np.ndarray
    n_steps: int

    def __len__(self):
        return self.x.shape[0]

    def shard(self, start, stop):
        return TrainBatch(self.x[start:stop], self.z[start:stop],
                          self.xi[start:stop], self.n[start:stop],
                          self.n_prime[start:stop], self.t_n[start:stop],
                          self.t_n1[start:stop], self.t_np[start:stop],
                          self.n_steps)


@dataclass
class _AdamState:
    m: OrderedDict
    v: OrderedDict
    step: int = 0


@dataclass
class TrainState:
    """Online weights, EMA weights and optimizer moments."""
    config: TrainConfig
    params: object
    ema: object
    adam: _AdamState
    dump_dir: str = None
    executor: object = field(default=None, repr=False)


@dataclass
class TrainResult:
    ema: object
    params: object
    history: list


def worker_count():
    """Number of worker threads allowed by ``BCM_LAB_THREADS``."""
    raw = os.environ.get(THREADS_ENV, '1')
    try:
        return max(1, int(raw))
    except ValueError:
        logger.warning("Ignoring non-integer %s=%r", THREADS_ENV, raw)
        return 1


def pseudo_huber(a, b, dim=None, factor=HUBER_C_FACTOR):
    """Return :math:`\\sqrt{\\|a - b\\|^2 + c^2} - c` with
    :math:`c = 0.00054 \\sqrt{d}`.

    Rows of a batch are compared pairwise; single vectors give a float.

    :raises ValueError: When shapes differ.

    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("Can't compare shapes {} and {}".format(a.shape, b.shape))
    if dim is None:
        dim = a.shape[-1]
    c = _huber_c(dim, factor)
    sq = np.sum((a - b) ** 2, axis=-1)
    result = np.sqrt(sq + c * c) - c
    if result.ndim == 0:
        return float(result)
    return result


def _huber_c(dim, factor):
    return factor * math.sqrt(dim)


def _col(t):
    return np.asarray(t, dtype=np.float64).reshape(-1, 1)


def ct_loss(model, target, x, z, t_n, t_n1, weight=None, factor=HUBER_C_FACTOR):
    """Consistency-training term, batch mean.

    .. math::

        \\lambda(t_n)\\, d\\big(f_\\theta(x + t_{n+1} z, t_{n+1}, 0),
        f_{\\bar\\theta}(x + t_n z, t_n, 0)\\big)

    :param model: The online model :math:`f_\\theta`; any ``model(x, t, u)``
        callable works.
    :param target: The stop-gradient model :math:`f_{\\bar\\theta}`.

    """
    x = as_batch(x)
    z = as_batch(z)
    if weight is None:
        weight = weights(t_n, t_n1)
    y1 = model(x + _col(t_n1) * z, t_n1, 0.0)
    ref = target(x + _col(t_n) * z, t_n, 0.0)
    return float(np.mean(np.asarray(weight) * pseudo_huber(y1, ref, factor=factor)))


def st_loss(model, target, x, z, t_n, t_nprime, weight=None,
            factor=HUBER_C_FACTOR, xi=None):
    """Soft trajectory term, batch mean.

    .. math::

        \\lambda'(t_n, t_{n'})\\, d\\big(f_{\\bar\\theta}(f_\\theta(x_{t_n},
        t_n, t_{n'}), t_{n'}, 0), f_{\\bar\\theta}(x_{t_n}, t_n, 0)\\big)

    with :math:`x_{t_n} = x + t_n z`.

    :param xi: Extra standard normals. When given, the reference is
        :math:`f_{\\bar\\theta}(x_{t_{n'}}, t_{n'}, 0)` at a point on the same
        Brownian path instead (the two-trajectory form).

    """
    x = as_batch(x)
    z = as_batch(z)
    if weight is None:
        weight = weights(t_n, t_nprime)
    x_n = x + _col(t_n) * z
    back = target(model(x_n, t_n, t_nprime), t_nprime, 0.0)
    if xi is None:
        ref = target(x_n, t_n, 0.0)
    else:
        _, x_u = brownian_pair(x, t_n, t_nprime, z, as_batch(xi))
        ref = target(x_u, t_nprime, 0.0)
    return float(np.mean(np.asarray(weight) * pseudo_huber(back, ref, factor=factor)))


def bct_terms(model, target, batch, variant=FULL_BCT, tape=None,
              scale=1.0, factor=HUBER_C_FACTOR):
    """Evaluate both loss terms on a batch and back-propagate them.

    :param tape: Receives ``scale * dL/dtheta`` where ``L`` is the
        weighted sum of per-example terms the variant optimizes. With
        ``tape=None`` nothing is differentiated.

    :returns: Per-example weighted ``(ct, st)`` terms.
    :rtype: (np.ndarray, np.ndarray)

    """
    x, z = batch.x, batch.z
    c = _huber_c(x.shape[1], factor)
    lam = weights(batch.t_n, batch.t_n1)
    lam_prime = weights(batch.t_n, batch.t_np)

    x_n = x + _col(batch.t_n) * z
    x_n1 = x + _col(batch.t_n1) * z
    ref = target.apply(x_n, batch.t_n, 0.0)

    train_ct = variant != NO_CT_ABLATION
    y1 = model.apply(x_n1, batch.t_n1, 0.0, tape=tape if train_ct else None)
    r1 = y1 - ref
    d1 = np.sqrt(np.sum(r1 * r1, axis=1) + c * c) - c

    if variant == EQ14_ABLATION:
        _, x_u = brownian_pair(x, batch.t_n, batch.t_np, z, batch.xi)
        st_ref = target.apply(x_u, batch.t_np, 0.0)
    else:
        st_ref = ref
    y3 = model.apply(x_n, batch.t_n, batch.t_np, tape=tape)
    y4 = target.apply(y3, batch.t_np, 0.0, tape=tape, stop_gradient=True)
    r2 = y4 - st_ref
    d2 = np.sqrt(np.sum(r2 * r2, axis=1) + c * c) - c

    if tape is not None:
        g4 = (scale * lam_prime / (d2 + c))[:, None] * r2
        g3 = target.backward(tape, g4)
        model.backward(tape, g3)
        if train_ct:
            g1 = (scale * lam / (d1 + c))[:, None] * r1
            model.backward(tape, g1)
    return lam * d1, lam_prime * d2


def draw_batch(config, density, k):
    """Draw the data, noise and index pairs of iteration ``k``."""
    rng = random_stream(config.seed, STREAM_TRAIN, k)
    grid, pmf = train_grid(k, config)
    size = config.batch_size
    x = density.sample(rng, size)
    z = rng.standard_normal(x.shape)
    xi = rng.standard_normal(x.shape)
    n, n_prime = sample_index_pairs(pmf, rng, size)
    return TrainBatch(x, z, xi, n, n_prime, grid.t(n), grid.t(n + 1),
                      grid.t(n_prime), len(grid))


def init_state(config, dump_dir=None, executor=None):
    """Fresh weights (EMA equal to online) and zeroed Adam moments."""
    params = init_params(config.arch, config.sigma_data, config.seed)
    zeros = OrderedDict((k, np.zeros_like(v)) for k, v in params.items())
    adam = _AdamState(zeros, OrderedDict(
        (k, np.zeros_like(v)) for k, v in params.items()))
    return TrainState(config, params, params.copy(), adam, dump_dir, executor)


def ema_update(ema, params, mu):
    """In place :math:`\\theta_{EMA} \\leftarrow \\mu \\theta_{EMA} +
    (1 - \\mu) \\theta`."""
    for name, value in params.items():
        if mu == 0:
            ema.arrays[name][...] = value
        else:
            ema.arrays[name] += (1.0 - mu) * (value - ema.arrays[name])


def _adam_step(state, grads, lr):
    cfg = state.config
    adam = state.adam
    adam.step += 1
    b1, b2 = cfg.adam_beta1, cfg.adam_beta2
    corr1 = 1.0 - b1 ** adam.step
    corr2 = 1.0 - b2 ** adam.step
    for name, g in grads.items():
        m = adam.m[name]
        v = adam.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        if lr:
            step = lr * (m / corr1) / (np.sqrt(v / corr2) + cfg.adam_eps)
            state.params.arrays[name] -= step


def _learning_rate(config, k):
    if config.warmup_iters <= 0:
        return config.lr
    return config.lr * min(1.0, (k + 1) / config.warmup_iters)


def _dump_batch(state, batch, k):
    folder = state.dump_dir or tempfile.gettempdir()
    os.makedirs(folder, exist_ok=True)
    path = os.path.join(folder, 'abort_k{}.npz'.format(k))
    np.savez(path, x=batch.x, z=batch.z, xi=batch.xi, n=batch.n,
             n_prime=batch.n_prime, t_n=batch.t_n, t_n1=batch.t_n1,
             t_np=batch.t_np, **{'param.' + k: v for k, v in state.params.items()})
    return path


def _shard_gradients(state, batch):
    cfg = state.config
    model = ConsistencyModel(state.params)
    total = len(batch)
    bounds = [(i, min(i + cfg.shard_size, total))
              for i in range(0, total, cfg.shard_size)]

    def work(bound):
        tape = GradientTape(state.params)
        ct, st = bct_terms(model, model, batch.shard(*bound), cfg.loss_variant,
                           tape, 1.0 / total, cfg.huber_c_factor)
        return ct.sum(), st.sum(), tape

    if state.executor is not None and len(bounds) > 1:
        results = list(state.executor.map(work, bounds))
    else:
        results = [work(b) for b in bounds]

    tape = results[0][2]
    for _, _, other in results[1:]:
        tape.merge(other)
    ct = sum(r[0] for r in results) / total
    st = sum(r[1] for r in results) / total
    return ct, st, tape


def train_step(state, batch, k):
    """Run one optimization step on ``batch`` at iteration ``k``.

    :returns: The updated state (modified in place) and the losses.
    :rtype: (TrainState, LossBreakdown)

    :raises NumericAbort: When the loss or the new weights are not finite;
        the batch is saved for inspection first.

    """
    cfg = state.config
    if not 0 <= k < cfg.total_iters:
        raise ValueError("Iteration {} outside [0, {})".format(k, cfg.total_iters))
    ct, st, tape = _shard_gradients(state, batch)
    total = st if cfg.loss_variant == NO_CT_ABLATION else ct + st
    losses = LossBreakdown(float(ct), float(st), float(total))

    if not (math.isfinite(ct) and math.isfinite(st)):
        path = _dump_batch(state, batch, k)
        logger.error("Non-finite loss at iteration %d; batch saved to %s", k, path)
        raise NumericAbort("Non-finite loss at iteration {}".format(k), k, path)

    _adam_step(state, tape.grads, _learning_rate(cfg, k))
    if not state.params.is_finite():
        path = _dump_batch(state, batch, k)
        logger.error("Non-finite weights after iteration %d; batch saved to %s",
                     k, path)
        raise NumericAbort("Non-finite weights after iteration {}".format(k),
                           k, path)
    ema_update(state.ema, state.params, cfg.mu_ema)
    return state, losses


def run_training(config, density, dump_dir=None, callback=None):
    """Train for exactly ``config.total_iters`` iterations.

    :param density: Training distribution (anything with ``sample`` and
        ``dim``).

    :param callback: Optional ``callback(k, losses)`` after every step.

    :returns: EMA weights, online weights and the per-iteration history
        rows ``(k, N_k, ct, st, total)``.
    :rtype: TrainResult

    """
    config.data_dim = density.dim
    threads = worker_count()
    executor = ThreadPoolExecutor(threads) if threads > 1 else None
    state = init_state(config, dump_dir, executor)
    history = []
    logger.info("Training %s on %s for %d iterations (%d params, %d threads)",
                config.loss_variant, config.dataset, config.total_iters,
                state.params.num_params(), threads)
    try:
        bar = tqdm(range(config.total_iters), disable=not config.progress,
                   desc='train', leave=False)
        for k in bar:
            batch = draw_batch(config, density, k)
            state, losses = train_step(state, batch, k)
            history.append((k, batch.n_steps, losses.ct_term,
                            losses.st_term, losses.total))
            if callback is not None:
                callback(k, losses)
            if config.log_every and (k + 1) % config.log_every == 0:
                logger.info("k=%d N=%d ct=%.5f st=%.5f total=%.5f", k,
                            batch.n_steps, losses.ct_term, losses.st_term,
                            losses.total)
                bar.set_postfix(loss='{:.4f}'.format(losses.total))
    finally:
        if executor is not None:
            executor.shutdown()
    return TrainResult(state.ema, state.params, history)
