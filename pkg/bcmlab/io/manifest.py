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
"""Run directories and their JSON-lines manifests."""

import json
import logging
import os
import tempfile
from dataclasses import dataclass, field, asdict
from datetime import datetime

__all__ = ['RunManifest', 'MANIFEST_NAME', 'make_run_dir', 'write_manifest',
           'read_manifest']

logger = logging.getLogger(__name__)

MANIFEST_NAME = 'manifest.jsonl'


@dataclass
class RunManifest:
    """Everything needed to rerun a command and check its outputs."""
    command: str
    argv: list
    config: dict
    seed: int
    checkpoint_sha256: str = None
    version: str = None
    duration: float = 0.0
    outputs: list = field(default_factory=list)
    status: str = 'ok'

    def to_dict(self):
        return asdict(self)


def make_run_dir(root, seed, now=None):
    """Create ``root/<YYYYmmdd-HHMMSS>-s<seed>``; never reuse a directory.

    A numeric suffix is added when the name is taken.

    """
    now = now or datetime.now()
    base = os.path.join(root, '{:%Y%m%d-%H%M%S}-s{}'.format(now, seed))
    os.makedirs(root, exist_ok=True)
    path = base
    suffix = 0
    while True:
        try:
            os.makedirs(path)
            return path
        except FileExistsError:
            suffix += 1
            path = '{}-{}'.format(base, suffix)


def write_manifest(run_dir, manifest):
    """Append ``manifest`` as one JSON line, replacing the file atomically."""
    path = os.path.join(run_dir, MANIFEST_NAME)
    existing = ''
    if os.path.exists(path):
        with open(path) as f:
            existing = f.read()
    fd, tmp = tempfile.mkstemp(dir=run_dir, prefix='.manifest-')
    with os.fdopen(fd, 'w') as f:
        f.write(existing)
        f.write(json.dumps(manifest.to_dict(), sort_keys=True) + '\n')
    os.replace(tmp, path)
    logger.debug("Wrote manifest %s", path)
    return path


def read_manifest(path):
    """Return the last record of a manifest file (or of a run directory).

    :raises ValueError: When the file holds no record.

    """
    if os.path.isdir(path):
        path = os.path.join(path, MANIFEST_NAME)
    with open(path) as f:
        records = [json.loads(line) for line in f if line.strip()]
    if not records:
        raise ValueError("Manifest {} is empty".format(path))
    return records[-1]
