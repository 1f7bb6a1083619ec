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
from PIL import Image

from bcmlab.io.plot import PALETTE, heatmap_plot, line_plot, scatter_plot


class TestPlots(unittest.TestCase):

    def setUp(self):
        self.folder = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.folder.cleanup()

    def path(self, name):
        return os.path.join(self.folder.name, name)

    def test_scatter(self):
        rng = np.random.default_rng(0)
        path = scatter_plot(self.path('s.png'), {'data': rng.standard_normal((50, 2)),
                                                 'model': rng.standard_normal((50, 2))},
                            size=(200, 100))
        with Image.open(path) as img:
            self.assertEqual(img.size, (200, 100))
            colours = {c for _, c in img.getcolors(200 * 100)}
        self.assertIn(PALETTE[0], colours)
        self.assertIn(PALETTE[1], colours)

    def test_single_point(self):
        path = scatter_plot(self.path('p.png'), {'x': [[1.0, 1.0]]})
        self.assertTrue(os.path.exists(path))

    def test_line(self):
        xs = np.arange(10)
        path = line_plot(self.path('l.png'), xs, {'loss': np.exp(-xs)}, log_y=True)
        with Image.open(path) as img:
            self.assertEqual(img.size, (640, 400))
            self.assertGreater(len(img.getcolors(640 * 400)), 1)

    def test_heatmap(self):
        matrix = np.zeros((4, 6))
        matrix[0, 0] = 2.0
        path = heatmap_plot(self.path('h.png'), matrix)
        with Image.open(path) as img:
            self.assertEqual(img.size, (6, 4))
            self.assertEqual(img.mode, 'L')
            self.assertEqual(img.getpixel((0, 3)), 0)
            self.assertEqual(img.getpixel((5, 0)), 255)


if __name__ == "__main__":
    unittest.main()
