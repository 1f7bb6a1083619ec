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

from bcmlab.data.densities import (
    EmpiricalDensity,
    MixtureDensity,
    PRESETS,
    make_density,
    ring8,
    single_gaussian)
from bcmlab.io.tables import write_matrix


class TestMixtureDensity(unittest.TestCase):

    def test_weights_normalized(self):
        mix = MixtureDensity([2.0, 6.0], [[0.0, 0.0], [1.0, 1.0]], 0.1)
        self.assertTrue(np.allclose(mix.weights, [0.25, 0.75]))
        self.assertEqual(mix.n_components, 2)
        self.assertEqual(mix.dim, 2)

    def test_invalid(self):
        with self.assertRaises(ValueError):
            MixtureDensity([1.0, -1.0], [[0.0], [1.0]], 0.1)
        with self.assertRaises(ValueError):
            MixtureDensity([1.0], [[0.0], [1.0]], 0.1)
        with self.assertRaises(ValueError):
            MixtureDensity([1.0], [[0.0]], 0.0)

    def test_presets_standardized(self):
        for name, build in PRESETS.items():
            density = build(0.5)
            self.assertTrue(np.allclose(np.sqrt(density.variance()), 0.5,
                                        atol=1e-6), name)
            self.assertTrue(np.allclose(density.mean(), 0.0, atol=1e-12), name)

    def test_sample_moments(self):
        density = ring8()
        x = density.sample(np.random.default_rng(0), 100000)
        self.assertEqual(x.shape, (100000, 2))
        self.assertTrue(np.allclose(x.std(axis=0), 0.5, rtol=0.02))


class TestScore(unittest.TestCase):

    def test_single_gaussian(self):
        density = single_gaussian()
        x = np.random.default_rng(1).standard_normal((20, 2))
        for t in (0.0, 0.3, 5.0):
            expected = -x / (0.25 + t * t)
            self.assertTrue(np.allclose(density.score(x, t), expected,
                                        rtol=1e-12))

    def test_symmetric_mixture(self):
        mix = MixtureDensity([1.0, 1.0], [[-1.0, 0.0], [1.0, 0.0]], 0.2)
        self.assertTrue(np.allclose(mix.score(np.zeros(2), 0.4), 0.0, atol=1e-15))

    def test_finite_differences(self):
        density = ring8()
        rng = np.random.default_rng(2)
        h = 1e-5
        for t in (0.05, 0.5, 3.0):
            x = density.sample(rng, 10) + t * rng.standard_normal((10, 2))
            score = density.score(x, t)
            fd = np.empty_like(x)
            for j in range(2):
                step = np.zeros(2)
                step[j] = h
                fd[:, j] = (density.log_prob(x + step, t)
                            - density.log_prob(x - step, t)) / (2 * h)
            err = np.linalg.norm(fd - score) / np.linalg.norm(score)
            self.assertLess(err, 1e-6)

    def test_negative_time(self):
        with self.assertRaises(ValueError):
            single_gaussian().score(np.zeros(2), -1.0)

    def test_log_prob_normalized(self):
        density = single_gaussian()
        self.assertAlmostEqual(float(density.log_prob(np.zeros(2))[0]),
                               -np.log(2 * np.pi * 0.25))


class TestConditionalMean(unittest.TestCase):

    def test_gaussian(self):
        density = single_gaussian()
        x = np.array([[0.7, 0.0], [-1.0, 0.0]])
        self.assertTrue(np.allclose(density.conditional_mean(x, [0, 1]), 0.0))

    def test_two_clusters(self):
        mix = MixtureDensity([1.0, 1.0], [[-1.0, -2.0], [1.0, 2.0]], 0.01)
        guess = mix.conditional_mean(np.array([[0.98, 0.0]]), [0, 1])
        self.assertAlmostEqual(float(guess[0, 0]), 2.0, places=6)


class TestMakeDensity(unittest.TestCase):

    def test_presets(self):
        self.assertEqual(make_density('ring8').n_components, 8)
        self.assertEqual(make_density('moons16').n_components, 16)
        with self.assertRaises(ValueError):
            make_density('spiral')

    def test_csv(self):
        points = np.random.default_rng(3).standard_normal((30, 3))
        with tempfile.TemporaryDirectory() as folder:
            path = os.path.join(folder, 'cloud.csv')
            write_matrix(path, points)
            density = make_density(path)
        self.assertIsInstance(density, EmpiricalDensity)
        self.assertEqual(density.dim, 3)
        drawn = density.sample(np.random.default_rng(0), 5)
        for row in drawn:
            self.assertTrue(np.any(np.all(points == row, axis=1)))

    def test_empirical_needs_points(self):
        with self.assertRaises(ValueError):
            EmpiricalDensity([[1.0, 2.0]])


if __name__ == "__main__":
    unittest.main()
