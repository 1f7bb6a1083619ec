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
"""Checkpoint files.

Layout (all little endian)::

    magic       8 bytes   b'BCMCKPT\\0'
    version     uint32
    arch_len    uint32
    arch        arch_len bytes of JSON (the ArchSpec fields)
    sigma_data  float64
    tensors     float64, C order, in param_shapes() order

A text manifest ``<checkpoint>.manifest`` lists the tensor shapes and
the SHA-256 of the binary file; loading refuses a file whose digest
does not match.

"""

import hashlib
import json
import logging
import os
import struct
from collections import OrderedDict

import numpy as np

from ..core.network import ArchSpec, ModelParams, param_shapes
from ..errors import ChecksumError

__all__ = ['MAGIC', 'FORMAT_VERSION', 'save_checkpoint', 'load_checkpoint',
           'file_sha256', 'manifest_path', 'read_checkpoint_manifest']

logger = logging.getLogger(__name__)

MAGIC = b'BCMCKPT\0'
FORMAT_VERSION = 1


def manifest_path(path):
    return path + '.manifest'


def file_sha256(path):
    digest = hashlib.sha256()
    with open(path, 'rb') as f:
        for chunk in iter(lambda: f.read(1 << 16), b''):
            digest.update(chunk)
    return digest.hexdigest()


def _encode(params):
    arch = json.dumps(params.arch.to_dict(), sort_keys=True).encode('utf-8')
    parts = [MAGIC, struct.pack('<II', FORMAT_VERSION, len(arch)), arch,
             struct.pack('<d', params.sigma_data)]
    for value in params.arrays.values():
        parts.append(np.ascontiguousarray(value, dtype='<f8').tobytes())
    return b''.join(parts)


def save_checkpoint(path, params):
    """Write ``params`` and its manifest.

    :returns: The SHA-256 hex digest of the checkpoint file.
    :rtype: str

    """
    folder = os.path.dirname(path)
    if folder:
        os.makedirs(folder, exist_ok=True)
    data = _encode(params)
    with open(path, 'wb') as f:
        f.write(data)
    checksum = hashlib.sha256(data).hexdigest()
    lines = ['format = {}'.format(FORMAT_VERSION),
             'sigma_data = {!r}'.format(params.sigma_data),
             'arch = {}'.format(json.dumps(params.arch.to_dict(), sort_keys=True))]
    for name, value in params.items():
        lines.append('tensor {} {}'.format(
            name, 'x'.join(str(s) for s in value.shape)))
    lines.append('sha256 = {}'.format(checksum))
    with open(manifest_path(path), 'w') as f:
        f.write('\n'.join(lines) + '\n')
    logger.info("Saved checkpoint %s (%d params, sha256 %s)", path,
                params.num_params(), checksum[:12])
    return checksum


def read_checkpoint_manifest(path):
    """Return the ``key = value`` entries of a checkpoint manifest."""
    entries = {}
    with open(manifest_path(path)) as f:
        for line in f:
            if '=' in line:
                key, value = line.split('=', 1)
                entries[key.strip()] = value.strip()
    return entries


def load_checkpoint(path, verify=True):
    """Read a checkpoint written by :func:`save_checkpoint`.

    :raises ChecksumError: When the manifest is missing or its digest
        differs from the file's.

    :raises ValueError: When the file is not a readable checkpoint.

    :rtype: ModelParams

    """
    if verify:
        if not os.path.exists(manifest_path(path)):
            raise ChecksumError("No manifest next to {}".format(path))
        expected = read_checkpoint_manifest(path).get('sha256')
        actual = file_sha256(path)
        if expected != actual:
            raise ChecksumError("Checksum mismatch for {}: manifest {}, file "
                                "{}".format(path, expected, actual))
    with open(path, 'rb') as f:
        data = f.read()
    if data[:len(MAGIC)] != MAGIC:
        raise ValueError("{} is not a bcmlab checkpoint".format(path))
    offset = len(MAGIC)
    version, arch_len = struct.unpack_from('<II', data, offset)
    if version != FORMAT_VERSION:
        raise ValueError("Unsupported checkpoint version {}".format(version))
    offset += 8
    arch = ArchSpec.from_dict(json.loads(data[offset:offset + arch_len]))
    offset += arch_len
    sigma_data, = struct.unpack_from('<d', data, offset)
    offset += 8
    arrays = OrderedDict()
    for name, shape in param_shapes(arch).items():
        count = int(np.prod(shape))
        end = offset + 8 * count
        if end > len(data):
            raise ValueError("{} is truncated at tensor {}".format(path, name))
        arrays[name] = np.frombuffer(data[offset:end], dtype='<f8').reshape(
            shape).astype(np.float64)
        offset = end
    if offset != len(data):
        raise ValueError("{} has {} trailing bytes".format(
            path, len(data) - offset))
    return ModelParams(arch, arrays, sigma_data)
