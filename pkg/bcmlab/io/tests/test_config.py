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

from bcmlab.core.training import NO_CT_ABLATION, TrainConfig
from bcmlab.errors import ConfigError
from bcmlab.io.config import dump_config, load_config, parse_config

CONFIGS = os.path.join(os.path.dirname(__file__), '..', '..', '..', 'configs')

MINIMAL = """
# comment line
total_iters = 100   # trailing comment
batch_size = 16
seed = 7
"""


class TestParseConfig(unittest.TestCase):

    def test_minimal(self):
        config = parse_config(MINIMAL)
        self.assertEqual(config, TrainConfig(total_iters=100, batch_size=16, seed=7))

    def test_types(self):
        config = parse_config(MINIMAL + "lr = 3e-4\nprogress = no\n"
                              "loss_variant = no-CT-ablation\n")
        self.assertEqual(config.lr, 3e-4)
        self.assertIs(config.progress, False)
        self.assertEqual(config.loss_variant, NO_CT_ABLATION)

    def test_every_problem_reported(self):
        text = "total_iters = ten\nseed = 1\nseed = 2\nwidth = 3\n"
        with self.assertRaises(ConfigError) as ctx:
            parse_config(text)
        keys = ctx.exception.keys
        self.assertIn("unparsable 'total_iters'", keys)
        self.assertIn("duplicate 'seed'", keys)
        self.assertIn("unknown 'width'", keys)
        self.assertIn("missing 'batch_size'", keys)
        self.assertIn("missing 'total_iters'", keys)

    def test_data_dim_is_internal(self):
        with self.assertRaises(ConfigError):
            parse_config(MINIMAL + "data_dim = 3\n")

    def test_malformed_line(self):
        with self.assertRaises(ConfigError):
            parse_config(MINIMAL + "just words\n")

    def test_invalid_value(self):
        with self.assertRaises(ConfigError) as ctx:
            parse_config(MINIMAL + "mu_ema = 1.5\n")
        self.assertEqual(ctx.exception.keys, ['mu_ema'])

    def test_overrides(self):
        config = parse_config(MINIMAL, overrides={'seed': 11})
        self.assertEqual(config.seed, 11)
        config = parse_config("batch_size = 4\n",
                              overrides={'total_iters': 1, 'seed': 0})
        self.assertEqual(config.total_iters, 1)

    def test_dump_roundtrip(self):
        config = parse_config(MINIMAL + "lr = 0.1\nprogress = false\n")
        self.assertEqual(parse_config(dump_config(config)), config)


class TestShippedConfigs(unittest.TestCase):

    def test_all_load(self):
        names = sorted(n for n in os.listdir(CONFIGS) if n.endswith('.cfg'))
        self.assertIn('smoke.cfg', names)
        for name in names:
            config = load_config(os.path.join(CONFIGS, name))
            self.assertGreater(config.total_iters, 0, name)

    def test_load_file(self):
        with tempfile.NamedTemporaryFile('w', suffix='.cfg', delete=False) as f:
            f.write(MINIMAL)
        try:
            self.assertEqual(load_config(f.name).seed, 7)
        finally:
            os.remove(f.name)


if __name__ == "__main__":
    unittest.main()
