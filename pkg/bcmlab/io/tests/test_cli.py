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
import contextlib
import io
import os
import tempfile
import unittest
from unittest import mock

import numpy as np

from bcmlab.errors import NumericAbort
from bcmlab.io.checkpoint import file_sha256
from bcmlab.io.cli import EXIT_ABORT, EXIT_OK, EXIT_USAGE, main
from bcmlab.io.manifest import read_manifest
from bcmlab.io.tables import load_table, read_matrix

SMOKE = os.path.join(os.path.dirname(__file__), '..', '..', '..', 'configs',
                     'smoke.cfg')


class CliTestCase(unittest.TestCase):

    def setUp(self):
        self.folder = tempfile.TemporaryDirectory()
        self.root = os.path.join(self.folder.name, 'runs')

    def tearDown(self):
        self.folder.cleanup()

    def run_cli(self, *argv):
        """Run the CLI; returns (exit code, stdout, new run directory)."""
        before = set(os.listdir(self.root)) if os.path.isdir(self.root) else set()
        stdout = io.StringIO()
        with contextlib.redirect_stdout(stdout), \
                contextlib.redirect_stderr(io.StringIO()):
            code = main(list(argv) + ['--out', self.root])
        after = set(os.listdir(self.root)) if os.path.isdir(self.root) else set()
        created = sorted(after - before)
        run_dir = os.path.join(self.root, created[0]) if created else None
        return code, stdout.getvalue(), run_dir


class TestCommands(CliTestCase):

    def test_make_data(self):
        code, out, run_dir = self.run_cli('make-data', '--dataset', 'ring8',
                                          '--n', '50', '--seed', '4')
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(read_matrix(os.path.join(run_dir, 'data.csv')).shape,
                         (50, 2))
        record = read_manifest(run_dir)
        self.assertEqual(record['status'], 'ok')
        self.assertEqual(record['seed'], 4)
        self.assertEqual(record['outputs'], ['data.csv'])

    def test_sample_oracle(self):
        code, out, run_dir = self.run_cli(
            'sample', '--checkpoint', 'oracle:single_gaussian',
            '--plan', 'combined_nfe4', '--n', '20', '--trajectory')
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(out.strip(), 'nfe=4')
        self.assertEqual(read_matrix(os.path.join(run_dir, 'samples.csv')).shape,
                         (20, 2))
        self.assertTrue(os.path.exists(os.path.join(run_dir, 'trajectory.csv')))

    def test_roundtrip_oracle_is_exact(self):
        code, out, run_dir = self.run_cli(
            'roundtrip', '--checkpoint', 'oracle:single_gaussian',
            '--ladder', '0,6,80', '--n', '100')
        self.assertEqual(code, EXIT_OK)
        mse = float(out.strip().split('mse=')[1])
        self.assertLess(mse, 1e-20)
        table = load_table(os.path.join(run_dir, 'roundtrip.csv'))
        self.assertEqual(table.get_column('nfe'), ['2'])

    def test_invert_interpolate_inpaint(self):
        code, out, run_dir = self.run_cli(
            'invert', '--checkpoint', 'oracle:single_gaussian', '--n', '10')
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(out.strip(), 'nfe=2')
        code, out, run_dir = self.run_cli(
            'interpolate', '--checkpoint', 'oracle:single_gaussian',
            '--steps', '5')
        self.assertEqual(code, EXIT_OK)
        table = load_table(os.path.join(run_dir, 'interpolation.csv'))
        self.assertEqual(table.get_row_count(), 5)
        frames = table.get_array()
        self.assertEqual(frames.shape, (5, 3))
        self.assertTrue(np.array_equal(frames[:, 0], np.linspace(0.0, 1.0, 5)))
        code, out, run_dir = self.run_cli(
            'inpaint', '--checkpoint', 'oracle:single_gaussian',
            '--mask', '0,1', '--n', '10')
        self.assertEqual(code, EXIT_OK)
        masked = read_matrix(os.path.join(run_dir, 'masked.csv'))
        filled = read_matrix(os.path.join(run_dir, 'inpainted.csv'))
        self.assertEqual(filled.shape, (10, 2))
        self.assertTrue((masked[:, 0] == filled[:, 0]).all())

    def test_eval_coverage(self):
        code, out, run_dir = self.run_cli(
            'eval', '--checkpoint', 'oracle:single_gaussian',
            '--metrics', 'coverage', '--coverage-steps', '11')
        self.assertEqual(code, EXIT_OK)
        coverage = load_table(os.path.join(run_dir, 'coverage.csv'))
        self.assertEqual(coverage.header,
                         ['n', 'n_prime', 't_n', 't_n_prime', 'prob'])
        self.assertGreater(coverage.get_row_count(), 0)
        self.assertTrue(os.path.exists(os.path.join(run_dir, 'metrics.csv')))

    def test_eval_metrics(self):
        code, out, run_dir = self.run_cli(
            'eval', '--checkpoint', 'oracle:single_gaussian',
            '--metrics', 'sw,mse', '--n', '200')
        self.assertEqual(code, EXIT_OK)
        table = load_table(os.path.join(run_dir, 'metrics.csv'))
        metrics = set(table.get_column('metric'))
        self.assertEqual(metrics, {'sliced_wasserstein', 'nfe', 'roundtrip_mse'})


class TestTrainAndReplay(CliTestCase):

    def test_train_then_sample(self):
        code, out, run_dir = self.run_cli('train', '--config', SMOKE)
        self.assertEqual(code, EXIT_OK)
        checkpoint = os.path.join(run_dir, 'checkpoint.bcm')
        self.assertEqual(out.strip(), checkpoint)
        record = read_manifest(run_dir)
        self.assertEqual(record['checkpoint_sha256'], file_sha256(checkpoint))
        self.assertEqual(record['config']['total_iters'], 10)
        self.assertEqual(load_table(os.path.join(run_dir, 'loss.csv'))
                         .get_row_count(), 10)

        code, out, sample_dir = self.run_cli('sample', '--checkpoint', checkpoint,
                                             '--n', '5')
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(read_manifest(sample_dir)['checkpoint_sha256'],
                         file_sha256(checkpoint))

    def test_replay_is_bitwise(self):
        code, _, first = self.run_cli('train', '--config', SMOKE, '--seed', '5')
        self.assertEqual(code, EXIT_OK)
        code, _, second = self.run_cli('replay', '--manifest', first)
        self.assertEqual(code, EXIT_OK)
        self.assertNotEqual(first, second)
        self.assertEqual(file_sha256(os.path.join(first, 'checkpoint.bcm')),
                         file_sha256(os.path.join(second, 'checkpoint.bcm')))

        code, _, first = self.run_cli('sample', '--checkpoint',
                                      'oracle:ring8', '--plan', 'zigzag_nfe3',
                                      '--n', '8', '--seed', '2')
        self.assertEqual(code, EXIT_OK)
        code, _, second = self.run_cli(
            'replay', '--manifest', os.path.join(first, 'manifest.jsonl'))
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(file_sha256(os.path.join(first, 'samples.csv')),
                         file_sha256(os.path.join(second, 'samples.csv')))


class TestExitCodes(CliTestCase):

    def test_usage(self):
        code, _, run_dir = self.run_cli('sample', '--checkpoint', 'x',
                                        '--plan', 'nope')
        self.assertEqual(code, EXIT_USAGE)
        self.assertIsNone(run_dir)

    def test_bad_config(self):
        path = os.path.join(self.folder.name, 'bad.cfg')
        with open(path, 'w') as f:
            f.write('total_iters = 1\nbatch_size = 4\nseed = 0\ncolour = red\n')
        code, _, _ = self.run_cli('train', '--config', path)
        self.assertEqual(code, EXIT_USAGE)

    def test_tampered_checkpoint(self):
        code, out, run_dir = self.run_cli('train', '--config', SMOKE)
        checkpoint = out.strip()
        with open(checkpoint, 'ab') as f:
            f.write(b'\0')
        code, _, sample_dir = self.run_cli('sample', '--checkpoint', checkpoint)
        self.assertEqual(code, EXIT_USAGE)
        self.assertEqual(read_manifest(sample_dir)['status'], 'error')

    def test_all_missing_mask(self):
        code, _, _ = self.run_cli('inpaint', '--checkpoint',
                                  'oracle:single_gaussian', '--mask', '1,1')
        self.assertEqual(code, EXIT_USAGE)

    def test_numeric_abort(self):
        abort = NumericAbort("Non-finite loss at iteration 3", 3, None)
        with mock.patch('bcmlab.io.cli.run_training', side_effect=abort):
            code, _, run_dir = self.run_cli('train', '--config', SMOKE)
        self.assertEqual(code, EXIT_ABORT)
        self.assertEqual(read_manifest(run_dir)['status'], 'numeric-abort')

    def test_replay_missing_manifest(self):
        code, _, _ = self.run_cli('replay', '--manifest',
                                  os.path.join(self.folder.name, 'nothing'))
        self.assertEqual(code, EXIT_USAGE)


if __name__ == "__main__":
    unittest.main()
