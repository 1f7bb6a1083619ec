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
"""Flat ``key = value`` configuration files.

::

    # single Gaussian smoke run
    total_iters = 2000
    batch_size = 256
    seed = 7
    mu_ema = 0.999

Values are converted to the type of the matching :class:`TrainConfig`
field. Problems are collected and reported together.

"""

import dataclasses
import logging

from ..core.training import TrainConfig
from ..errors import ConfigError

__all__ = ['parse_config', 'load_config', 'dump_config', 'REQUIRED_KEYS',
           'INTERNAL_KEYS']

logger = logging.getLogger(__name__)

REQUIRED_KEYS = ('total_iters', 'batch_size', 'seed')

# filled in from the dataset, never read from a file
INTERNAL_KEYS = ('data_dim',)

_TRUE = ('1', 'true', 'yes', 'on')
_FALSE = ('0', 'false', 'no', 'off')


def _field_types():
    return {f.name: f.type for f in dataclasses.fields(TrainConfig)
            if f.name not in INTERNAL_KEYS}


def _convert(raw, kind):
    if kind is bool:
        lowered = raw.lower()
        if lowered in _TRUE:
            return True
        if lowered in _FALSE:
            return False
        raise ValueError(raw)
    if kind is int:
        return int(raw)
    if kind is float:
        return float(raw)
    return raw


def parse_config(text, source='<string>', overrides=None):
    """Build a :class:`TrainConfig` from config file text.

    :param overrides: Values applied after parsing (for example a seed
        given on the command line).
    :type overrides: dict

    :raises ConfigError: Listing every unknown, missing, duplicated or
        unparsable key, or values the config rejects.

    """
    types = _field_types()
    values = {}
    bad = []
    for number, line in enumerate(text.splitlines(), 1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ConfigError("{}:{}: expected 'key = value', got '{}'".format(
                source, number, line))
        key, raw = (part.strip() for part in line.split('=', 1))
        if key not in types:
            bad.append("unknown '{}'".format(key))
            continue
        if key in values:
            bad.append("duplicate '{}'".format(key))
            continue
        try:
            values[key] = _convert(raw, types[key])
        except ValueError:
            bad.append("unparsable '{}'".format(key))
    values.update(overrides or {})
    for key in REQUIRED_KEYS:
        if key not in values:
            bad.append("missing '{}'".format(key))
    if bad:
        raise ConfigError("Bad config {}".format(source), bad)
    config = TrainConfig(**values)
    logger.debug("Parsed %d keys from %s", len(values), source)
    return config


def load_config(path, overrides=None):
    """Read and parse a config file."""
    with open(path) as f:
        return parse_config(f.read(), path, overrides)


def dump_config(config):
    """Render ``config`` back to file text; :func:`parse_config` accepts it."""
    lines = []
    for key, value in config.to_dict().items():
        if key in INTERNAL_KEYS:
            continue
        if isinstance(value, bool):
            value = 'true' if value else 'false'
        elif isinstance(value, float):
            value = repr(value)
        lines.append('{} = {}'.format(key, value))
    return '\n'.join(lines) + '\n'
