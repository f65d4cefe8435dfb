import argparse
import json
import logging
import os
import sys
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from cadec import __version__
from cadec.batchtools import (AblationStudy, BatchResultWriter, ScalingBenchmark, SyntheticComparison,
                              map_jobs)
from cadec.constraints import extract_constraints, load_constraints, save_constraints
from cadec.decoder import DecodeConfig, decode_constrained
from cadec.errors import CadecError, ClassIndexOutOfRange, EmptyCorpus, MissingCounterpart, ParseError
from cadec.labels import (LABEL_SUFFIX, ClassMapping, LabelSequence, list_label_files, read_label_dir,
                          read_label_file, read_label_tokens, write_label_file)
from cadec.metrics import MetricAccumulator
from cadec.probs import read_prob_file
from cadec.synth import GeneratorSpec, calibrate_sigma, default_mapping, generate_corpus, write_corpus
#==============================================#
    # In this file (in-order as they appear):
    #       RunManifest(dataclass)
    #       load_config() / resolve_settings()
    #       cmd_extract() ... cmd_replay()
    #       build_parser()
    #       main()
#==============================================#

logger = logging.getLogger(__name__)

SEED_VARIABLE = 'CADEC_SEED'
MANIFEST_SCHEMA = 1
PROB_SUFFIXES = ('.csv', '.bin')
LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'

#==============================================#
# START CLASSES
#==============================================#

@dataclass
class RunManifest:
    '''
    Record of one command run: what was asked, with which resolved
    settings, on which files, and how long each stage took.

    `arguments` and `settings` are enough to run the command again.
    '''
    command: str
    argv: list
    arguments: dict
    settings: dict
    seed: int = None
    version: str = __version__
    schema: int = MANIFEST_SCHEMA
    inputs: list = field(default_factory=list)
    outputs: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    records: list = field(default_factory=list)

    def stage(self, name, began):
        '''Record the wall time of stage `name` started at `began` (perf_counter).'''
        self.timings[name] = round(time.perf_counter() - began, 6)

    def write(self, path):
        with open(path, 'w') as f:
            json.dump(asdict(self), f, indent=2, default=_plain)
            f.write('\n')
        return path

    @classmethod
    def read(cls, path):
        '''Load a manifest. Raises ParseError naming the file.'''
        with open(path) as f:
            try:
                doc = json.load(f)
            except json.JSONDecodeError as err:
                raise ParseError(err.msg, source=path, line=err.lineno) from None
        if not isinstance(doc, dict):
            raise ParseError("top level must be an object", source=path)
        if doc.get('schema') != MANIFEST_SCHEMA:
            raise ParseError("unsupported manifest schema {!r}".format(doc.get('schema')),
                             source=path, field='schema')
        for key in ('command', 'arguments', 'settings'):
            if key not in doc:
                raise ParseError("missing required field", source=path, field=key)
        try:
            return cls(**doc)
        except TypeError as err:
            raise ParseError(str(err), source=path) from None

#==============================================#
# START FUNCTIONS
#==============================================#

def _plain(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError("cannot serialise {!r}".format(value))

def _int_list(value):
    if isinstance(value, str):
        value = [v for v in value.split(',') if v.strip()]
    return [int(v) for v in value]

def _str_list(value):
    if isinstance(value, str):
        value = [v.strip() for v in value.split(',') if v.strip()]
    return [str(v) for v in value]

def _flag(value):
    if not isinstance(value, bool):
        raise ValueError("expected true or false")
    return value

def _optional(kind):
    return lambda value: None if value is None else kind(value)

def _fraction(value):
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise ValueError("{} is not in [0, 1]".format(value))
    return value

# Settings every command understands: name -> (converter, default).
COMMON = {
    'seed': (int, 0),
    'jobs': (int, 1),
    'log_level': (str, 'WARNING'),
    'manifest': (_optional(str), None),
}

SETTINGS = {
    'extract': {
        'mapping': (_optional(str), None),
        'slack': (_fraction, 0.0),
        'num_classes': (_optional(int), None),
    },
    'decode': {
        'mapping': (_optional(str), None),
        'mode': (str, 'hard'),
        'w_transition': (float, 1.0),
        'w_duration': (float, 1.0),
        'soft_penalty': (float, 10.0),
        'epsilon': (float, 1e-10),
        'fallback': (str, 'error'),
        'no_start_end': (_flag, False),
        'no_transitions': (_flag, False),
        'no_durations': (_flag, False),
    },
    'eval': {
        'mapping': (_optional(str), None),
        'ignore': (_str_list, []),
        'output': (str, 'report.json'),
    },
    'synth': {
        'num_classes': (int, 10),
        'n_train': (int, 50),
        'n_test': (int, 20),
        'sigma': (float, 1.0),
        'target_acc': (_optional(float), None),
        't_min': (int, 200),
        't_max': (int, 500),
        'spec': (_optional(str), None),
        'binary': (_flag, False),
    },
    'bench': {
        'lengths': (_int_list, [1000, 2000, 4000, 8000, 16000]),
        'num_classes': (int, 48),
        'transitions': (int, 150),
        'repetitions': (int, 3),
        'modes': (_str_list, ['hard', 'classical']),
        'output': (str, '.'),
    },
    'compare': {
        'num_classes': (int, 10),
        'seeds': (int, 20),
        'n_train': (int, 50),
        'n_test': (int, 20),
        'sigma': (_optional(float), None),
        'target_acc': (_optional(float), 65.0),
        'slack': (_fraction, 0.0),
        'output': (str, '.'),
    },
    'ablate': {
        'num_classes': (int, 10),
        'n_train': (int, 50),
        'n_test': (int, 20),
        'sigma': (float, 1.0),
        'slack': (_fraction, 0.0),
        'output': (str, '.'),
    },
    'replay': {},
}

def load_config(path):
    '''
    Read a JSON config file into a dict with underscore keys.

    Raises ParseError when the file is not a JSON object.
    '''
    with open(path) as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as err:
            raise ParseError(err.msg, source=path, line=err.lineno) from None
    if not isinstance(doc, dict):
        raise ParseError("top level must be an object", source=path)

    def normalise(section):
        return {key.replace('-', '_'): value for key, value in section.items()}

    config = normalise(doc)
    for command in SETTINGS:
        if command in config:
            if not isinstance(config[command], dict):
                raise ParseError("expected an object", source=path, field=command)
            config[command] = normalise(config[command])
    return config

def resolve_settings(command, args, config=None, environ=None, source=None):
    '''
    Merge flags, config file, environment and defaults for `command`.

    args: `argparse.Namespace` flags left unset are None.

    config: `dict` from `load_config`.
    '''
    config = config or {}
    environ = os.environ if environ is None else environ
    section = config.get(command, {})
    settings = {}
    for key, (convert, default) in list(COMMON.items()) + list(SETTINGS[command].items()):
        flag = getattr(args, key, None)
        if flag is not None:
            try:
                settings[key] = convert(flag)
            except (TypeError, ValueError) as err:
                raise ParseError(str(err), field=key) from None
            continue
        if key in section or key in config:
            value = section[key] if key in section else config[key]
            where = "{}.{}".format(command, key) if key in section else key
            try:
                settings[key] = convert(value)
            except (TypeError, ValueError) as err:
                raise ParseError(str(err), source=source, field=where) from None
        elif key == 'seed' and environ.get(SEED_VARIABLE):
            try:
                settings[key] = int(environ[SEED_VARIABLE])
            except ValueError:
                raise ParseError("{} must be an integer".format(SEED_VARIABLE)) from None
        else:
            settings[key] = default
    return settings

def _configure_logging(level):
    numeric = logging.getLevelName(str(level).upper())
    if not isinstance(numeric, int):
        raise ParseError("unknown log level '{}'".format(level), field='log_level')
    logging.basicConfig(level=numeric, format=LOG_FORMAT, stream=sys.stderr, force=True)

def _mapping(settings):
    return ClassMapping.read(settings['mapping']) if settings.get('mapping') else None

def _manifest_path(settings, default):
    return settings['manifest'] if settings.get('manifest') else default

def _decode_config(settings):
    try:
        return DecodeConfig(mode=settings['mode'], w_transition=settings['w_transition'],
                            w_duration=settings['w_duration'], soft_penalty=settings['soft_penalty'],
                            epsilon_floor=settings['epsilon'], infeasible_fallback=settings['fallback'],
                            use_start_end=not settings['no_start_end'],
                            use_transitions=not settings['no_transitions'],
                            use_durations=not settings['no_durations'])
    except ValueError as err:
        raise ParseError(str(err), source='settings') from None

def _prob_files(paths):
    files = []
    for path in paths:
        if os.path.isdir(path):
            files.extend(os.path.join(path, name) for name in sorted(os.listdir(path))
                         if name.endswith(PROB_SUFFIXES))
        else:
            files.append(path)
    if not files:
        raise ParseError("no probability files (*.csv, *.bin) found", source=', '.join(paths))
    seen = {}
    for path in files:
        video = os.path.splitext(os.path.basename(path))[0]
        if video in seen:
            raise ParseError("video '{}' also given as {}".format(video, seen[video]), source=path)
        seen[video] = path
    return files

def _decode_one(task):
    path, out_dir, cs, cfg, mapping = task
    video = os.path.splitext(os.path.basename(path))[0]
    probs = read_prob_file(path)
    result = decode_constrained(probs, cs, cfg)
    out = os.path.join(out_dir, video + LABEL_SUFFIX)
    write_label_file(out, result.labels, mapping)
    return {'video': video, 'input': path, 'output': out, 'frames': probs.num_frames,
            'mode': result.mode.value, 'log_score': result.log_score,
            'feasible': result.feasible, 'used_fallback': result.used_fallback}

def cmd_extract(args, settings, manifest):
    '''Count constraints from a directory of ground-truth label files.'''
    began = time.perf_counter()
    mapping = _mapping(settings)
    if mapping is not None and settings['num_classes'] not in (None, len(mapping)):
        raise ParseError("the mapping names {} classes but {} were asked for".format(
            len(mapping), settings['num_classes']), source=settings['mapping'], field='num_classes')
    corpus = read_label_dir(args.label_dir, settings['num_classes'], mapping)
    if not corpus:
        raise EmptyCorpus("no label files (*{}) in {}".format(LABEL_SUFFIX, args.label_dir))
    manifest.stage('read', began)

    began = time.perf_counter()
    C = next(iter(corpus.values())).num_classes
    names = mapping.names if mapping is not None else None
    cs = extract_constraints(corpus.values(), C, slack=settings['slack'], class_names=names)
    save_constraints(args.output, cs)
    manifest.stage('extract', began)

    manifest.inputs = [os.path.join(args.label_dir, video + LABEL_SUFFIX) for video in corpus]
    manifest.outputs = [args.output]
    print(cs.summary())
    return _manifest_path(settings, args.output + '.manifest.json')

def cmd_decode(args, settings, manifest):
    '''Decode every probability file into a label file.'''
    began = time.perf_counter()
    cs = load_constraints(args.constraints)
    cfg = _decode_config(settings)
    mapping = _mapping(settings)
    files = _prob_files(args.probs)
    os.makedirs(args.output, exist_ok=True)
    manifest.stage('load', began)

    began = time.perf_counter()
    tasks = [(path, args.output, cs, cfg, mapping) for path in files]
    records = map_jobs(_decode_one, tasks, settings['jobs'])
    manifest.stage('decode', began)

    for record in records:
        if record['used_fallback']:
            logger.warning("video %s: no valid sequence, decoded classically", record['video'])
    manifest.inputs = [args.constraints] + files
    manifest.outputs = [r['output'] for r in records]
    manifest.records = records
    fallbacks = sum(r['used_fallback'] for r in records)
    print("decoded {} videos ({} mode, {} fallbacks) into {}".format(
        len(records), cfg.mode.value, fallbacks, args.output))
    return _manifest_path(settings, os.path.join(args.output, 'manifest.json'))

def _read_pair(task):
    video, pred_path, gt_path, mapping = task
    if mapping is not None:
        C = len(mapping)
        return video, read_label_file(pred_path, C, mapping).labels, read_label_file(gt_path, C, mapping).labels
    pred, gt = read_label_tokens(pred_path), read_label_tokens(gt_path)
    C = max(max(pred), max(gt)) + 1
    out = []
    for path, labels in ((pred_path, pred), (gt_path, gt)):
        try:
            out.append(LabelSequence(labels, C).labels)
        except ClassIndexOutOfRange as err:
            raise ParseError(str(err), source=path) from None
    return (video, *out)

def _ignore_classes(names, mapping):
    classes = []
    for name in names:
        if mapping is not None and name in mapping:
            classes.append(mapping.index(name))
            continue
        try:
            classes.append(int(name))
        except ValueError:
            raise ParseError("unknown class '{}'".format(name), field='ignore') from None
    return classes

def cmd_eval(args, settings, manifest):
    '''Score predicted label files against ground truth of the same names.'''
    began = time.perf_counter()
    mapping = _mapping(settings)
    preds, gts = set(list_label_files(args.pred_dir)), set(list_label_files(args.gt_dir))
    missing = sorted(preds ^ gts)
    if missing:
        name = missing[0]
        side, other = (args.gt_dir, args.pred_dir) if name in preds else (args.pred_dir, args.gt_dir)
        raise MissingCounterpart("{} in {} has no counterpart in {}".format(name, other, side))
    if not preds:
        raise EmptyCorpus("no label files (*{}) in {}".format(LABEL_SUFFIX, args.pred_dir))

    names = sorted(preds)
    tasks = [(name[:-len(LABEL_SUFFIX)], os.path.join(args.pred_dir, name), os.path.join(args.gt_dir, name), mapping)
             for name in names]
    pairs = map_jobs(_read_pair, tasks, settings['jobs'])
    manifest.stage('read', began)

    began = time.perf_counter()
    acc = MetricAccumulator(ignore=_ignore_classes(settings['ignore'], mapping))
    for video, pred, gt in pairs:
        acc.update(pred, gt, name=video)
    report = acc.report()
    with open(settings['output'], 'w') as f:
        f.write(report.to_json())
    manifest.stage('evaluate', began)

    manifest.inputs = [t[1] for t in tasks] + [t[2] for t in tasks]
    manifest.outputs = [settings['output']]
    print(report.table())
    return _manifest_path(settings, settings['output'] + '.manifest.json')

def cmd_synth(args, settings, manifest):
    '''Write a synthetic corpus: training labels, test labels and test probabilities.'''
    began = time.perf_counter()
    seed = settings['seed']
    if settings['spec']:
        with open(settings['spec']) as f:
            try:
                spec = GeneratorSpec.from_dict(json.load(f))
            except json.JSONDecodeError as err:
                raise ParseError(err.msg, source=settings['spec'], line=err.lineno) from None
        manifest.inputs = [settings['spec']]
    else:
        spec = GeneratorSpec.procedural(settings['num_classes'], seed=seed, sigma=settings['sigma'],
                                        t_min=settings['t_min'], t_max=settings['t_max'])
    if settings['target_acc'] is not None:
        spec = spec.replace(sigma=calibrate_sigma(spec, settings['target_acc'], seed=seed))
    manifest.stage('spec', began)

    began = time.perf_counter()
    train, test = generate_corpus(spec, settings['n_train'], settings['n_test'], rng=seed)
    split = write_corpus(args.output, train, test, spec, default_mapping(spec.num_classes),
                         binary=settings['binary'])
    manifest.stage('generate', began)

    manifest.outputs = [os.path.join(args.output, 'split.json')]
    manifest.records = [{'sigma': spec.sigma, 'train': len(split['train']), 'test': len(split['test'])}]
    print("wrote {} training and {} test videos (C={}, sigma={:.4f}) to {}".format(
        len(train), len(test), spec.num_classes, spec.sigma, args.output))
    return _manifest_path(settings, os.path.join(args.output, 'manifest.json'))

def _writer(settings):
    os.makedirs(settings['output'], exist_ok=True)
    return BatchResultWriter(settings['output'])

def _run_job(job, writer, settings, manifest):
    began = time.perf_counter()
    job.execute()
    manifest.stage(job.name, began)
    manifest.outputs = [writer.last_path]
    print(job.table())
    return _manifest_path(settings, os.path.join(settings['output'], job.name + '.manifest.json'))

def cmd_bench(args, settings, manifest):
    '''Time decoding against video length.'''
    writer = _writer(settings)
    job = ScalingBenchmark(on_finish_callback=writer.on_batch_finish, lengths=settings['lengths'],
                           num_classes=settings['num_classes'], num_transitions=settings['transitions'],
                           repetitions=settings['repetitions'], seed=settings['seed'],
                           modes=settings['modes'])
    path = _run_job(job, writer, settings, manifest)
    manifest.records = [{'mode': mode, 'slope': slope} for mode, slope in job.slopes.items()]
    return path

def cmd_compare(args, settings, manifest):
    '''Constrained vs classical vs argmax over many synthetic corpora.'''
    seed = settings['seed']
    writer = _writer(settings)
    spec = GeneratorSpec.procedural(settings['num_classes'], seed=seed)
    job = SyntheticComparison(on_finish_callback=writer.on_batch_finish, spec=spec,
                              seeds=tuple(range(seed, seed + settings['seeds'])),
                              n_train=settings['n_train'], n_test=settings['n_test'],
                              sigma=settings['sigma'], target_acc=settings['target_acc'],
                              slack=settings['slack'], jobs=settings['jobs'])
    path = _run_job(job, writer, settings, manifest)
    manifest.records = [job.summary]
    return path

def cmd_ablate(args, settings, manifest):
    '''Decode one synthetic corpus with each constraint family on and off.'''
    seed = settings['seed']
    spec = GeneratorSpec.procedural(settings['num_classes'], seed=seed, sigma=settings['sigma'])
    writer = _writer(settings)
    job = AblationStudy(on_finish_callback=writer.on_batch_finish, spec=spec, seed=seed,
                        n_train=settings['n_train'], n_test=settings['n_test'], slack=settings['slack'])
    return _run_job(job, writer, settings, manifest)

def cmd_replay(args, settings, manifest):
    '''Run a recorded command again with its recorded settings.'''
    recorded = RunManifest.read(args.manifest_file)
    if recorded.command not in COMMANDS or recorded.command == 'replay':
        raise ParseError("cannot replay command '{}'".format(recorded.command),
                         source=args.manifest_file, field='command')
    logger.info("replaying %s from %s", recorded.command, args.manifest_file)
    replay_args = argparse.Namespace(**recorded.arguments)
    _execute(recorded.command, replay_args, recorded.settings, recorded.argv)
    manifest.inputs = [args.manifest_file]
    return None

COMMANDS = {
    'extract': cmd_extract,
    'decode': cmd_decode,
    'eval': cmd_eval,
    'synth': cmd_synth,
    'bench': cmd_bench,
    'compare': cmd_compare,
    'ablate': cmd_ablate,
    'replay': cmd_replay,
}

def _execute(command, args, settings, argv):
    _configure_logging(settings['log_level'])
    arguments = {k: v for k, v in vars(args).items()
                 if k not in settings and k not in ('command', 'config')}
    manifest = RunManifest(command, list(argv), arguments, settings, seed=settings.get('seed'))
    path = COMMANDS[command](args, settings, manifest)
    if path is not None:
        manifest.write(path)
        logger.info("manifest written to %s", path)

def _common(parser):
    group = parser.add_argument_group('common options')
    group.add_argument('--config', help='JSON file with default settings')
    group.add_argument('--seed', type=int, help='random seed (default: ${} or 0)'.format(SEED_VARIABLE))
    group.add_argument('--jobs', type=int, help='worker processes for decode and eval (default 1)')
    group.add_argument('--log-level', help='DEBUG, INFO, WARNING (default) or ERROR')
    group.add_argument('--manifest', help='where to write the run manifest')

def build_parser():
    '''The argparse parser. Every option defaults to None so config files can fill it.'''
    parser = argparse.ArgumentParser(
        prog='cadec', description='Constraint-aware decoding for temporal action segmentation.',
        epilog='Settings come from flags, then the --config file (a section named after the command '
               'overrides its top level), then $CADEC_SEED for the seed, then defaults.')
    parser.add_argument('--version', action='version', version='%(prog)s ' + __version__)
    subparsers = parser.add_subparsers(dest='command', required=True)

    p = subparsers.add_parser('extract', help='extract constraints from ground-truth labels')
    p.add_argument('label_dir', help='directory of *.txt label files')
    p.add_argument('-o', '--output', required=True, help='constraint file to write')
    p.add_argument('--mapping', help='name<TAB>index class mapping file')
    p.add_argument('--slack', type=float, help='widen duration bounds by this fraction (default 0)')
    p.add_argument('--num-classes', type=int, help='class count when no mapping is given')
    _common(p)

    p = subparsers.add_parser('decode', help='decode probability matrices into label files')
    p.add_argument('probs', nargs='+', help='probability files or directories of them')
    p.add_argument('-c', '--constraints', required=True, help='constraint file')
    p.add_argument('-o', '--output', required=True, help='directory for the label files')
    p.add_argument('--mapping', help='write class names from this mapping file')
    p.add_argument('--mode', choices=['hard', 'soft', 'classical', 'tracking'])
    p.add_argument('--w-transition', type=float, help='weight of log transition confidence')
    p.add_argument('--w-duration', type=float, help='weight of duration penalties (soft mode)')
    p.add_argument('--soft-penalty', type=float, help='penalty per violation in soft mode')
    p.add_argument('--epsilon', type=float, help='floor applied before taking logs')
    p.add_argument('--fallback', choices=['error', 'classical'], help='what to do when no valid sequence exists')
    p.add_argument('--no-start-end', action='store_true', default=None, help='ignore start/end sets')
    p.add_argument('--no-transitions', action='store_true', default=None, help='ignore the transition table')
    p.add_argument('--no-durations', action='store_true', default=None, help='ignore duration bounds')
    _common(p)

    p = subparsers.add_parser('eval', help='score predictions against ground truth')
    p.add_argument('pred_dir')
    p.add_argument('gt_dir')
    p.add_argument('--mapping', help='name<TAB>index class mapping file')
    p.add_argument('--ignore', help='comma separated classes left out of every metric')
    p.add_argument('-o', '--output', help='JSON report to write (default report.json)')
    _common(p)

    p = subparsers.add_parser('synth', help='generate a synthetic corpus')
    p.add_argument('output', help='directory to write into')
    p.add_argument('--num-classes', type=int)
    p.add_argument('--n-train', type=int)
    p.add_argument('--n-test', type=int)
    p.add_argument('--sigma', type=float, help='emission noise level')
    p.add_argument('--target-acc', type=float, help='calibrate sigma to this argmax accuracy (percent)')
    p.add_argument('--t-min', type=int)
    p.add_argument('--t-max', type=int)
    p.add_argument('--spec', help='generator spec JSON instead of the procedural grammar')
    p.add_argument('--binary', action='store_true', default=None, help='write probabilities in binary form')
    _common(p)

    p = subparsers.add_parser('bench', help='time decoding against video length')
    p.add_argument('--lengths', help='comma separated, strictly increasing video lengths')
    p.add_argument('--num-classes', type=int)
    p.add_argument('--transitions', type=int, help='number of valid transitions')
    p.add_argument('--repetitions', type=int)
    p.add_argument('--modes', help='comma separated decode modes')
    p.add_argument('-o', '--output', help='directory for the CSV and manifest')
    _common(p)

    p = subparsers.add_parser('compare', help='constrained vs classical decoding over many seeds')
    p.add_argument('--num-classes', type=int)
    p.add_argument('--seeds', type=int, help='number of seeds, counting up from --seed')
    p.add_argument('--n-train', type=int)
    p.add_argument('--n-test', type=int)
    p.add_argument('--sigma', type=float, help='fixed noise level (skips calibration)')
    p.add_argument('--target-acc', type=float, help='argmax accuracy to calibrate sigma to')
    p.add_argument('--slack', type=float)
    p.add_argument('-o', '--output', help='directory for the CSV and manifest')
    _common(p)

    p = subparsers.add_parser('ablate', help='constraint family ablation on a synthetic corpus')
    p.add_argument('--num-classes', type=int)
    p.add_argument('--n-train', type=int)
    p.add_argument('--n-test', type=int)
    p.add_argument('--sigma', type=float)
    p.add_argument('--slack', type=float)
    p.add_argument('-o', '--output', help='directory for the CSV and manifest')
    _common(p)

    p = subparsers.add_parser('replay', help='re-run a command from its manifest')
    p.add_argument('manifest_file')
    _common(p)
    return parser

def main(argv=None):
    '''
    Run the command line. Returns the process exit status:
    0 ok, 2 parse errors, 3 empty corpus, 4 dimension or length mismatch,
    5 infeasible constraints, 6 missing counterpart, 1 anything else.
    '''
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config) if args.config else {}
        settings = resolve_settings(args.command, args, config, source=args.config)
        _execute(args.command, args, settings, argv)
    except CadecError as err:
        print("error: {}".format(err), file=sys.stderr)
        return err.exit_code
    except OSError as err:
        print("error: {}".format(err), file=sys.stderr)
        return 2
    return 0
