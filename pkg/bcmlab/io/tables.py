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
"""Delimited text tables: samples, trajectories, losses and metrics."""

import os

import numpy as np

__all__ = ['Table', 'load_table', 'write_table', 'read_matrix',
           'write_matrix', 'write_trajectory', 'SEPARATORS']

SEPARATORS = {'csv': ',', 'ssv': ';', 'tsv': '\t'}


def _separator(mode):
    try:
        return SEPARATORS[mode]
    except KeyError:
        raise ValueError("Unknown table mode '{}'".format(mode))


class Table:
    """A header row plus string cells, read from a delimited file.

    Lines starting with ``#`` are comments.

    :param path: Path to the file.
    :type path: str

    :param separator: Cell separator.
    :type separator: str

    """

    def __init__(self, path, separator=','):
        self.path = path
        with open(path) as f:
            lines = [line.rstrip('\r\n') for line in f]
        rows = [line.split(separator) for line in lines
                if line and not line.startswith('#')]
        if not rows:
            raise ValueError("Table {} is empty".format(path))
        self.header = rows[0]
        self.rows = rows[1:]

    def get_row_count(self):
        """
        :returns: Number of data rows (the header excluded).
        :rtype: int
        """
        return len(self.rows)

    def get_column_count(self):
        """
        :returns: Number of columns in the header.
        :rtype: int
        """
        return len(self.header)

    def get_column(self, name):
        """
        :param name: Name of the required column
        :type name: str

        :returns: The column's cells.
        :rtype: list

        :raises KeyError: When no column has that name.
        """
        if name not in self.header:
            raise KeyError("No column '{}' in {}".format(name, self.path))
        index = self.header.index(name)
        return [row[index] for row in self.rows]

    def get_row(self, index):
        """
        :returns: The row at ``index`` as a header-keyed dict.
        :rtype: dict
        """
        return dict(zip(self.header, self.rows[index]))

    def get_array(self):
        """
        :returns: All data cells as floats.
        :rtype: np.ndarray
        """
        return np.array([[float(v) for v in row] for row in self.rows])


def load_table(path, mode='csv'):
    """Read a delimited file ('csv', 'ssv' or 'tsv') into a :class:`Table`."""
    return Table(path, _separator(mode))


def _cell(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_table(path, header, rows, comments=(), mode='csv'):
    """Write ``rows`` under ``header``; floats keep full precision.

    :param comments: Lines written first, each prefixed with ``#``.

    """
    sep = _separator(mode)
    folder = os.path.dirname(path)
    if folder:
        os.makedirs(folder, exist_ok=True)
    with open(path, 'w') as f:
        for line in comments:
            f.write('# {}\n'.format(line))
        f.write(sep.join(header) + '\n')
        for row in rows:
            f.write(sep.join(_cell(v) for v in row) + '\n')


def read_matrix(path, mode='csv'):
    """Read a numeric table as a 2D float array (header skipped)."""
    table = load_table(path, mode)
    return table.get_array().reshape(-1, table.get_column_count())


def write_matrix(path, array, columns=None, comments=()):
    """Write one row per vector with columns ``x0, x1, ...``."""
    array = np.atleast_2d(np.asarray(array, dtype=np.float64))
    if columns is None:
        columns = ['x{}'.format(i) for i in range(array.shape[1])]
    write_table(path, columns, array.tolist(), comments)


def write_trajectory(path, trajectory):
    """Dump every ``(t, state)`` of a trajectory, one row per sample."""
    rows = []
    dim = None
    for t, state in trajectory:
        for i, vec in enumerate(np.atleast_2d(state)):
            dim = len(vec)
            rows.append([t, i] + vec.tolist())
    columns = ['t', 'sample'] + ['x{}'.format(i) for i in range(dim or 0)]
    write_table(path, columns, rows, ['nfe={}'.format(trajectory.nfe)])
