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
import os
import tempfile
import unittest

import numpy as np

from bcmlab.core.samplers import Trajectory
from bcmlab.io.tables import (
    load_table,
    read_matrix,
    write_matrix,
    write_table,
    write_trajectory)


class TestTables(unittest.TestCase):

    def setUp(self):
        self.folder = tempfile.TemporaryDirectory()
        self.path = os.path.join(self.folder.name, 'out', 'table.csv')

    def tearDown(self):
        self.folder.cleanup()

    def test_write_and_load(self):
        write_table(self.path, ['k', 'loss'], [(0, 0.1), (1, np.float64(1 / 3))],
                    comments=['loss history'])
        table = load_table(self.path)
        self.assertEqual(table.header, ['k', 'loss'])
        self.assertEqual(table.get_row_count(), 2)
        self.assertEqual(table.get_column_count(), 2)
        self.assertEqual(table.get_column('k'), ['0', '1'])
        self.assertEqual(float(table.get_row(1)['loss']), 1 / 3)
        with self.assertRaises(KeyError):
            table.get_column('missing')

    def test_numpy_scalars_written_as_plain_floats(self):
        row = [np.float64(0.25)] + list(np.ravel(np.array([[1 / 3, -2.5]])))
        write_table(self.path, ['alpha', 'x0', 'x1'], [row])
        with open(self.path) as f:
            text = f.read()
        self.assertNotIn('np.', text)
        self.assertEqual(text.splitlines()[1], '0.25,{!r},-2.5'.format(1 / 3))
        self.assertTrue(np.array_equal(load_table(self.path).get_array(),
                                       [[0.25, 1 / 3, -2.5]]))

    def test_matrix_keeps_precision(self):
        values = np.random.default_rng(0).standard_normal((7, 3))
        write_matrix(self.path, values)
        self.assertTrue(np.array_equal(read_matrix(self.path), values))
        self.assertEqual(load_table(self.path).header, ['x0', 'x1', 'x2'])

    def test_other_separators(self):
        write_table(self.path, ['a', 'b'], [(1, 2)], mode='tsv')
        self.assertEqual(load_table(self.path, 'tsv').get_column('b'), ['2'])
        with self.assertRaises(ValueError):
            load_table(self.path, 'xml')

    def test_empty_file(self):
        os.makedirs(os.path.dirname(self.path))
        with open(self.path, 'w') as f:
            f.write('# nothing\n')
        with self.assertRaises(ValueError):
            load_table(self.path)

    def test_trajectory(self):
        traj = Trajectory(2.0, np.zeros((3, 2)))
        traj.step(lambda x, t, u: x + 1.0, 2.0, 0.0)
        write_trajectory(self.path, traj)
        table = load_table(self.path)
        self.assertEqual(table.header, ['t', 'sample', 'x0', 'x1'])
        self.assertEqual(table.get_row_count(), 6)
        self.assertEqual(table.get_column('t'), ['2.0'] * 3 + ['0.0'] * 3)
        with open(self.path) as f:
            self.assertEqual(f.readline(), '# nfe=1\n')


if __name__ == "__main__":
    unittest.main()
