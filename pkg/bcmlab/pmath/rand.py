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
"""Seeded random number streams.

Every consumer of randomness asks for its own generator by
``(seed, stream, *counters)``. Generators for different paths are
statistically independent, and the same path always yields the same
numbers regardless of what else was drawn before, which keeps training
reproducible under any worker count.

"""

import numpy as np

__all__ = [
    'STREAM_INIT', 'STREAM_TRAIN', 'STREAM_DATA', 'STREAM_SAMPLE',
    'STREAM_INVERT', 'STREAM_EVAL',
    'random_stream',
]

STREAM_INIT = 0
STREAM_TRAIN = 1
STREAM_DATA = 2
STREAM_SAMPLE = 3
STREAM_INVERT = 4
STREAM_EVAL = 5


def random_stream(seed, *path):
    """Return the generator addressed by ``seed`` and ``path``.

    :param seed: Master seed of the run.
    :type seed: int

    :param path: Stream id followed by any counters (iteration, worker
        index, sample index...). All entries must be non-negative ints.

    :returns: An independent generator for this address.
    :rtype: np.random.Generator

    """
    if seed is None or seed < 0:
        raise ValueError("Seed must be a non-negative integer, got {}".format(seed))
    key = tuple(int(p) for p in path)
    if any(p < 0 for p in key):
        raise ValueError("Stream path entries must be non-negative: {}".format(key))
    return np.random.Generator(np.random.PCG64(
        np.random.SeedSequence(int(seed), spawn_key=key)))
