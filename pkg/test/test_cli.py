import unittest
import argparse
import contextlib
import io
import json
import os
import shutil
import tempfile

from cadec.cli import RunManifest, load_config, main, resolve_settings
from cadec.constraints import ConstraintSet, DurationBounds, TransitionTable, load_constraints, save_constraints
from cadec.errors import ParseError
from cadec.labels import read_label_file

# Helper for getting the current directory.
THIS_DIR = os.path.dirname(os.path.abspath(__file__))
FILES = os.path.join(THIS_DIR, 'test_label_files')
TOY = os.path.join(FILES, 'toy')
MAPPING = os.path.join(FILES, 'mapping.txt')
EXAMPLE = os.path.join(FILES, 'probs', 'example.csv')

def run(*argv):
    '''main() with stdout and stderr captured; returns (status, stdout, stderr).'''
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        status = main([str(a) for a in argv])
    return status, out.getvalue(), err.getvalue()

def write_lines(path, tokens):
    with open(path, 'w') as f:
        f.write(''.join('{}\n'.format(t) for t in tokens))

class CliTestCase(unittest.TestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = self._tmp.name

    def tearDown(self):
        self._tmp.cleanup()

    def path(self, *parts):
        return os.path.join(self.tmp, *parts)

class TestExtract(CliTestCase):
    '''Tests for `cadec extract`'''
    def test_toy(self):
        '''Writes the constraint file and its manifest'''
        out = self.path('constraints.json')
        status, stdout, _ = run('extract', TOY, '--mapping', MAPPING, '-o', out)
        self.assertEqual(status, 0)
        self.assertIn('transitions:  3', stdout)

        cs = load_constraints(out)
        self.assertAlmostEqual(cs.transitions[(0, 2)], 2 / 3)
        self.assertEqual(cs.class_names, ('A', 'B', 'C'))

        manifest = RunManifest.read(out + '.manifest.json')
        self.assertEqual(manifest.command, 'extract')
        self.assertEqual(len(manifest.inputs), 2)
        self.assertIn('extract', manifest.timings)

    def test_empty_dir(self):
        '''No label files is an empty corpus'''
        os.makedirs(self.path('empty'))
        status, _, stderr = run('extract', self.path('empty'), '-o', self.path('c.json'))
        self.assertEqual(status, 3)
        self.assertIn('error:', stderr)

    def test_bad_label(self):
        '''Unknown class names are parse errors'''
        status, _, stderr = run('extract', os.path.join(FILES, 'bad'), '--mapping', MAPPING,
                                '-o', self.path('c.json'))
        self.assertEqual(status, 2)
        self.assertIn('line 3', stderr)

    def test_missing_dir(self):
        '''Unreadable inputs exit with 2'''
        status, _, _ = run('extract', self.path('nowhere'), '-o', self.path('c.json'))
        self.assertEqual(status, 2)

    def test_bad_settings(self):
        '''Out-of-range slack and a class count the mapping disagrees with exit with 2'''
        status, _, stderr = run('extract', TOY, '--mapping', MAPPING, '--slack', 1.5, '-o', self.path('c.json'))
        self.assertEqual(status, 2)
        self.assertIn("field 'slack'", stderr)

        status, _, stderr = run('extract', TOY, '--mapping', MAPPING, '--num-classes', 7, '-o', self.path('c.json'))
        self.assertEqual(status, 2)
        self.assertIn("field 'num_classes'", stderr)
        self.assertFalse(os.path.exists(self.path('c.json')))

class TestDecode(CliTestCase):
    '''Tests for `cadec decode`'''
    def constraints(self, cs):
        path = self.path('constraints.json')
        save_constraints(path, cs)
        return path

    def test_permissive(self):
        '''The worked example decodes to class 0 throughout'''
        c = self.constraints(ConstraintSet.permissive(2))
        status, _, _ = run('decode', EXAMPLE, '-c', c, '-o', self.path('out'))
        self.assertEqual(status, 0)
        self.assertEqual(list(read_label_file(self.path('out', 'example.txt'), 2)), [0, 0, 0])

        with open(self.path('out', 'manifest.json')) as f:
            manifest = json.load(f)
        self.assertEqual(manifest['records'][0]['video'], 'example')
        self.assertEqual(manifest['settings']['mode'], 'hard')

    def test_infeasible(self):
        '''Exit 5 unless the classical fallback is asked for'''
        cs = ConstraintSet(2, {0}, {1}, TransitionTable({}, 2), DurationBounds.permissive(2))
        c = self.constraints(cs)
        status, _, _ = run('decode', EXAMPLE, '-c', c, '-o', self.path('out'))
        self.assertEqual(status, 5)

        status, _, _ = run('decode', EXAMPLE, '-c', c, '-o', self.path('out'), '--fallback', 'classical')
        self.assertEqual(status, 0)
        manifest = RunManifest.read(self.path('out', 'manifest.json'))
        self.assertTrue(manifest.records[0]['used_fallback'])

    def test_soft_and_flags(self):
        '''Soft mode and family switches reach the decoder'''
        cs = ConstraintSet(2, {0}, {1}, TransitionTable({}, 2), DurationBounds.permissive(2))
        c = self.constraints(cs)
        status, _, _ = run('decode', EXAMPLE, '-c', c, '-o', self.path('soft'), '--mode', 'soft')
        self.assertEqual(status, 0)
        status, _, _ = run('decode', EXAMPLE, '-c', c, '-o', self.path('off'), '--no-start-end')
        self.assertEqual(status, 0)
        self.assertEqual(list(read_label_file(self.path('off', 'example.txt'), 2)), [0, 0, 0])

    def test_dimension_mismatch(self):
        '''Three-class constraints against two-class probabilities'''
        c = self.constraints(ConstraintSet.permissive(3))
        status, _, _ = run('decode', EXAMPLE, '-c', c, '-o', self.path('out'))
        self.assertEqual(status, 4)

    def test_no_files(self):
        '''An empty input directory is a parse error'''
        os.makedirs(self.path('empty'))
        c = self.constraints(ConstraintSet.permissive(2))
        status, _, _ = run('decode', self.path('empty'), '-c', c, '-o', self.path('out'))
        self.assertEqual(status, 2)

class TestEval(CliTestCase):
    '''Tests for `cadec eval`'''
    def test_identity(self):
        '''Ground truth against itself scores 100'''
        report = self.path('report.json')
        status, stdout, _ = run('eval', TOY, TOY, '--mapping', MAPPING, '-o', report)
        self.assertEqual(status, 0)
        self.assertIn('F1@10', stdout)
        with open(report) as f:
            doc = json.load(f)
        for key in ('acc', 'edit', 'f1_10', 'f1_25', 'f1_50'):
            self.assertAlmostEqual(doc[key], 100.0)
        self.assertTrue(os.path.isfile(report + '.manifest.json'))

    def test_missing_counterpart(self):
        '''A prediction without ground truth exits with 6'''
        os.makedirs(self.path('pred'))
        shutil.copy(os.path.join(TOY, 'video1.txt'), self.path('pred', 'video1.txt'))
        status, _, stderr = run('eval', self.path('pred'), TOY, '--mapping', MAPPING, '-o', self.path('r.json'))
        self.assertEqual(status, 6)
        self.assertIn('video2.txt', stderr)

    def test_length_mismatch(self):
        '''Different lengths exit with 4 and name the video'''
        for d in ('pred', 'gt'):
            os.makedirs(self.path(d))
        write_lines(self.path('pred', 'v.txt'), [0, 1])
        write_lines(self.path('gt', 'v.txt'), [0, 1, 1])
        status, _, stderr = run('eval', self.path('pred'), self.path('gt'), '-o', self.path('r.json'))
        self.assertEqual(status, 4)
        self.assertIn("'v'", stderr)

    def test_parse_error(self):
        '''Unreadable labels exit with 2'''
        for d in ('pred', 'gt'):
            os.makedirs(self.path(d))
        write_lines(self.path('pred', 'v.txt'), ['A', 'Z'])
        write_lines(self.path('gt', 'v.txt'), ['A', 'B'])
        status, _, _ = run('eval', self.path('pred'), self.path('gt'), '--mapping', MAPPING,
                           '-o', self.path('r.json'))
        self.assertEqual(status, 2)

    def test_ignore(self):
        '''Ignored classes leave the scores'''
        for d in ('pred', 'gt'):
            os.makedirs(self.path(d))
        write_lines(self.path('pred', 'v.txt'), ['A', 'A', 'B'])
        write_lines(self.path('gt', 'v.txt'), ['A', 'C', 'C'])
        report = self.path('r.json')
        status, _, _ = run('eval', self.path('pred'), self.path('gt'), '--mapping', MAPPING,
                           '--ignore', 'C', '-o', report)
        self.assertEqual(status, 0)
        with open(report) as f:
            self.assertAlmostEqual(json.load(f)['acc'], 100.0)

    def test_empty(self):
        '''Two empty directories are an empty corpus'''
        for d in ('pred', 'gt'):
            os.makedirs(self.path(d))
        status, _, _ = run('eval', self.path('pred'), self.path('gt'), '-o', self.path('r.json'))
        self.assertEqual(status, 3)

class TestPipeline(CliTestCase):
    '''synth, extract, decode and eval end to end'''
    SYNTH = ('--num-classes', 4, '--n-train', 8, '--n-test', 3, '--t-min', 40, '--t-max', 60, '--seed', 3)

    def test_pipeline(self):
        '''Every stage succeeds and reruns give identical files'''
        corpus = self.path('corpus')
        self.assertEqual(run('synth', corpus, *self.SYNTH)[0], 0)
        self.assertEqual(sorted(os.listdir(corpus)), ['manifest.json', 'mapping.txt', 'split.json', 'test', 'train'])

        mapping = os.path.join(corpus, 'mapping.txt')
        constraints = self.path('constraints.json')
        self.assertEqual(run('extract', os.path.join(corpus, 'train'), '--mapping', mapping, '-o', constraints)[0], 0)
        pred = self.path('pred')
        status, _, _ = run('decode', os.path.join(corpus, 'test', 'probs'), '-c', constraints, '-o', pred,
                           '--mapping', mapping, '--fallback', 'classical')
        self.assertEqual(status, 0)
        report = self.path('report.json')
        status, _, _ = run('eval', pred, os.path.join(corpus, 'test', 'gt'), '--mapping', mapping, '-o', report)
        self.assertEqual(status, 0)
        with open(report) as f:
            self.assertEqual(len(json.load(f)['per_video']), 3)

        again = self.path('again')
        self.assertEqual(run('synth', again, *self.SYNTH)[0], 0)
        for sub in (('train', 'train_0000.txt'), ('test', 'probs', 'test_0002.csv')):
            with open(os.path.join(corpus, *sub)) as a, open(os.path.join(again, *sub)) as b:
                self.assertEqual(a.read(), b.read())

    def test_binary(self):
        '''Binary probabilities decode like CSV ones'''
        corpus = self.path('corpus')
        self.assertEqual(run('synth', corpus, *self.SYNTH, '--binary')[0], 0)
        self.assertIn('test_0000.bin', os.listdir(os.path.join(corpus, 'test', 'probs')))

class TestSettings(unittest.TestCase):
    '''Tests for config files and precedence'''
    def args(self, **flags):
        return argparse.Namespace(**flags)

    def test_precedence(self):
        '''Flag, then command section, then top level, then CADEC_SEED, then default'''
        config = {'seed': 5, 'mode': 'classical', 'decode': {'mode': 'soft'}}
        env = {'CADEC_SEED': '9'}
        settings = resolve_settings('decode', self.args(seed=None, mode=None), config, env)
        self.assertEqual(settings['seed'], 5)
        self.assertEqual(settings['mode'], 'soft')
        self.assertEqual(settings['soft_penalty'], 10.0)

        settings = resolve_settings('decode', self.args(seed=1, mode='hard'), config, env)
        self.assertEqual((settings['seed'], settings['mode']), (1, 'hard'))

        settings = resolve_settings('decode', self.args(), {}, env)
        self.assertEqual(settings['seed'], 9)
        self.assertEqual(resolve_settings('decode', self.args(), {}, {})['seed'], 0)

    def test_bad_values(self):
        '''Unconvertible values name their field'''
        with self.assertRaises(ParseError) as ctx:
            resolve_settings('decode', self.args(), {'decode': {'soft_penalty': 'lots'}}, {})
        self.assertEqual(ctx.exception.field, 'decode.soft_penalty')
        self.assertRaises(ParseError, resolve_settings, 'decode', self.args(), {}, {'CADEC_SEED': 'x'})

    def test_load_config(self):
        '''Dashed keys are normalised; non-objects refused'''
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'config.json')
            with open(path, 'w') as f:
                json.dump({'log-level': 'INFO', 'bench': {'num-classes': 8}}, f)
            config = load_config(path)
            self.assertEqual(config['log_level'], 'INFO')
            self.assertEqual(config['bench'], {'num_classes': 8})

            with open(path, 'w') as f:
                f.write('[1, 2]')
            self.assertRaises(ParseError, load_config, path)

    def test_config_file(self):
        '''Config values reach the command'''
        with tempfile.TemporaryDirectory() as tmp:
            config = os.path.join(tmp, 'config.json')
            with open(config, 'w') as f:
                json.dump({'extract': {'mapping': MAPPING, 'slack': 0.1}}, f)
            out = os.path.join(tmp, 'c.json')
            self.assertEqual(run('extract', TOY, '-o', out, '--config', config)[0], 0)
            self.assertAlmostEqual(load_constraints(out).durations[0][0], 0.09)

    def test_bad_log_level(self):
        '''Unknown log levels exit with 2'''
        with tempfile.TemporaryDirectory() as tmp:
            status, _, _ = run('extract', TOY, '-o', os.path.join(tmp, 'c.json'), '--log-level', 'chatty')
            self.assertEqual(status, 2)

class TestReplay(CliTestCase):
    '''Tests for `cadec replay`'''
    def test_replay(self):
        '''Replaying a manifest writes the same output again'''
        out = self.path('constraints.json')
        self.assertEqual(run('extract', TOY, '--mapping', MAPPING, '-o', out, '--slack', 0.2)[0], 0)
        with open(out) as f:
            first = f.read()
        os.remove(out)

        self.assertEqual(run('replay', out + '.manifest.json')[0], 0)
        with open(out) as f:
            self.assertEqual(f.read(), first)

    def test_bad_manifest(self):
        '''Manifests from another schema are refused'''
        path = self.path('m.json')
        with open(path, 'w') as f:
            json.dump({'schema': 99, 'command': 'extract', 'arguments': {}, 'settings': {}}, f)
        self.assertEqual(run('replay', path)[0], 2)
