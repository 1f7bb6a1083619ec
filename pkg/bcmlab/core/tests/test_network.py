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
import unittest

import numpy as np

from bcmlab.core.network import (
    ArchSpec,
    ConsistencyModel,
    GradientTape,
    TimeEmbedding,
    backward,
    embed_times,
    forward,
    init_params,
    param_shapes)
from bcmlab.pmath.parameterization import coeffs

TINY = ArchSpec(dim=2, hidden_width=8, hidden_depth=2, n_freqs=4, emb_dim=8)


def randomized(arch=TINY, seed=0, scale=0.5):
    params = init_params(arch, 0.5, seed)
    rng = np.random.default_rng(seed + 100)
    for value in params.arrays.values():
        value += scale * rng.standard_normal(value.shape)
    return params


class TestArchitecture(unittest.TestCase):

    def test_shapes(self):
        shapes = param_shapes(TINY)
        self.assertEqual(list(shapes)[0], 'emb.W')
        self.assertEqual(shapes['emb.W'], (16, 8))
        self.assertEqual(shapes['h0.W'], (10, 8))
        self.assertEqual(shapes['out.W'], (8, 2))
        params = init_params(TINY)
        self.assertEqual(params.num_params(), sum(
            int(np.prod(s)) for s in shapes.values()))

    def test_roundtrip_dict(self):
        self.assertEqual(ArchSpec.from_dict(TINY.to_dict()), TINY)

    def test_invalid(self):
        with self.assertRaises(ValueError):
            ArchSpec(dim=0)
        with self.assertRaises(ValueError):
            ArchSpec(activation='relu')


class TestEmbedding(unittest.TestCase):

    def test_zero_time(self):
        emb = TimeEmbedding(4)
        features = emb(0.0)
        self.assertTrue(np.array_equal(features[0, :4], np.zeros(4)))
        self.assertTrue(np.array_equal(features[0, 4:], np.ones(4)))

    def test_concatenation(self):
        emb = TimeEmbedding(4)
        both = embed_times(np.array([1.0, 2.0]), np.array([0.0, 3.0]), emb)
        self.assertEqual(both.shape, (2, 16))
        self.assertTrue(np.array_equal(both[:, 8:], emb(np.array([0.0, 3.0]))))

    def test_negative(self):
        with self.assertRaises(ValueError):
            embed_times(-1.0, 0.0, TimeEmbedding())


class TestModel(unittest.TestCase):

    def test_initial_model_scales_input(self):
        model = ConsistencyModel(init_params(TINY, 0.5, 3))
        x = np.array([[0.3, -1.2], [2.0, 0.5]])
        c_skip = coeffs(4.0, 1.0, 0.5).c_skip
        self.assertTrue(np.allclose(model(x, 4.0, 1.0), c_skip * x, rtol=1e-15))

    def test_boundary_bitwise(self):
        model = ConsistencyModel(randomized())
        rng = np.random.default_rng(5)
        x = rng.standard_normal((1000, 2)) * 5
        t = rng.uniform(0, 80, 1000)
        self.assertTrue(np.array_equal(model(x, t, t), x))

    def test_call_matches_apply(self):
        model = ConsistencyModel(randomized())
        x = np.random.default_rng(2).standard_normal((6, 2))
        self.assertTrue(np.array_equal(model(x, 2.0, 0.5), model.apply(x, 2.0, 0.5)))
        self.assertEqual(model(x[0], 2.0, 0.5).shape, (2,))

    def test_small_input_perturbation(self):
        arch = ArchSpec()
        params = init_params(arch, 0.5, 1)
        # fan-in scaled output layer so the raw network is not identically 0
        live = params.copy()
        rng = np.random.default_rng(8)
        live.arrays['out.W'][...] = (rng.standard_normal(live['out.W'].shape)
                                     / np.sqrt(arch.hidden_width))
        x = rng.standard_normal((64, 2))
        step = rng.standard_normal((64, 2))
        step *= 1e-6 / np.linalg.norm(step, axis=1, keepdims=True)
        for model in (ConsistencyModel(params), ConsistencyModel(live)):
            for t, u in ((80.0, 0.0), (2.0, 0.5), (0.5, 2.0)):
                change = np.linalg.norm(model(x + step, t, u) - model(x, t, u),
                                        axis=1)
                self.assertTrue(np.all(change <= 1e-2))

    def test_dimension_mismatch(self):
        params = init_params(TINY)
        with self.assertRaises(ValueError):
            forward(params, np.zeros((3, 3)), 1.0, 0.0)

    def test_copy_is_independent(self):
        params = init_params(TINY)
        other = params.copy()
        other.arrays['out.b'][0] = 1.0
        self.assertEqual(params['out.b'][0], 0.0)


class TestGradients(unittest.TestCase):

    def setUp(self):
        self.params = randomized()
        self.model = ConsistencyModel(self.params)
        rng = np.random.default_rng(11)
        self.x = rng.standard_normal((5, 2))
        self.t = rng.uniform(0.1, 5.0, 5)
        self.u = rng.uniform(0.0, 5.0, 5)
        self.w = rng.standard_normal((5, 2))

    def loss(self):
        return float(np.sum(self.w * self.model.apply(self.x, self.t, self.u)))

    def test_parameter_gradient(self):
        tape = GradientTape(self.params)
        self.model.apply(self.x, self.t, self.u, tape)
        self.model.backward(tape, self.w)
        self.assertEqual(len(tape), 0)
        flat = self.params.as_vector()
        analytic = tape.as_vector()
        rng = np.random.default_rng(0)
        picked = rng.choice(flat.size, 25, replace=False)
        numeric = []
        h = 1e-6
        for i in picked:
            bumped = flat.copy()
            bumped[i] += h
            self.params.load_vector(bumped)
            up = self.loss()
            bumped[i] -= 2 * h
            self.params.load_vector(bumped)
            down = self.loss()
            numeric.append((up - down) / (2 * h))
        self.params.load_vector(flat)
        err = np.linalg.norm(np.array(numeric) - analytic[picked])
        self.assertLess(err / np.linalg.norm(analytic[picked]), 1e-5)

    def test_input_gradient(self):
        tape = GradientTape(self.params)
        self.model.apply(self.x, self.t, self.u, tape)
        g_x = self.model.backward(tape, self.w)
        h = 1e-6
        for row, col in ((0, 0), (2, 1), (4, 0)):
            bumped = self.x.copy()
            bumped[row, col] += h
            up = np.sum(self.w * self.model.apply(bumped, self.t, self.u))
            bumped[row, col] -= 2 * h
            down = np.sum(self.w * self.model.apply(bumped, self.t, self.u))
            self.assertAlmostEqual((up - down) / (2 * h), g_x[row, col],
                                   delta=1e-6 * max(1.0, abs(g_x[row, col])))

    def test_stop_gradient_branch_is_zero(self):
        tape = GradientTape(self.params)
        self.model.apply(self.x, self.t, self.u, tape, stop_gradient=True)
        g_x = self.model.backward(tape, self.w)
        for value in tape.grads.values():
            self.assertTrue(np.all(value == 0))
        self.assertGreater(np.abs(g_x).sum(), 0)

    def test_tape_misuse(self):
        tape = GradientTape(self.params)
        with self.assertRaises(RuntimeError):
            self.model.backward(tape, self.w)
        forward(self.params, self.x, self.t, self.u, tape)
        with self.assertRaises(RuntimeError):
            self.model.backward(tape, self.w)

    def test_raw_backward_and_merge(self):
        tape = GradientTape(self.params)
        forward(self.params, self.x, self.t, self.u, tape)
        backward(self.params, tape, self.w)
        doubled = GradientTape(self.params).merge(tape).merge(tape)
        self.assertTrue(np.allclose(doubled.as_vector(), 2 * tape.as_vector()))
        tape.zero()
        self.assertEqual(np.abs(tape.as_vector()).sum(), 0.0)


if __name__ == "__main__":
    unittest.main()
