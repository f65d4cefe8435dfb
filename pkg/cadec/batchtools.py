import csv
import datetime
import hashlib
import logging
import os
import time
from abc import ABCMeta, abstractmethod
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binomtest, linregress

from cadec.constraints import ConstraintSet, DurationBounds, TransitionTable, extract_constraints
from cadec.decoder import DecodeConfig, DecodeMode, Fallback, decode_classical, decode_constrained
from cadec.errors import InvalidSpec
from cadec.metrics import DEFAULT_OVERLAPS, evaluate_corpus
from cadec.probs import FrameProbMatrix
from cadec.synth import GeneratorSpec, calibrate_sigma, generate_corpus
from cadec.utilities import RunningStats
#==============================================#
    # In this file (in-order as they appear):
    #       BatchJob(ABCMeta)
    #       BatchResult @dataclass
    #       BatchResultWriter
    #       ScalingBenchmark(BatchJob)
    #       SyntheticComparison(BatchJob)
    #       AblationStudy(BatchJob)
    #       map_jobs()
    #       random_instance()
#==============================================#

logger = logging.getLogger(__name__)

#==============================================#
# START CLASSES
#==============================================#

class BatchJob(metaclass=ABCMeta):
    '''
    Serves as an abstract base class for a batch of decoding experiments.

    Notes:

    If running several jobs at once in separate processes, make sure there
    is one object per job!

    `execute` accepts **kwargs much like `prepare` does, so parameters can be
    set up front with `prepare` or passed straight to `execute`.

    Usage pattern example:

        job = ScalingBenchmark(name='bench')
        job.prepare(lengths=(1000, 2000), repetitions=3)
        job.execute()

        print(job.results)
    '''
    def __init__(self, name, description='', on_finish_callback=None):
        '''
        name: `str` A name for this job. Used as the file name by `BatchResultWriter`.

        description: `str` a short description of the experiment.

        on_finish_callback: `def(BatchJob)` called on completion when not None.
        '''
        self._name = name
        self._description = description
        self._callback = on_finish_callback
        self._results = []

    def execute(self, **kwargs):
        '''
        Run the job. Will overwrite any previous results.

        Allows for an additional kwargs passing for any setup.
        '''
        self._results = []

        self._run(**kwargs)

        if self._callback is not None:
            self._callback(self)

    def _report_result(self, result):
        '''Used internally to track the `BatchResult` of one scenario.'''
        self._results.append(result)

    def prepare(self, **kwargs):
        '''
        Set the parameters of the job before running.

        Unknown keys raise InvalidSpec.
        '''
        for key, value in kwargs.items():
            if not hasattr(self, key) or key.startswith('_'):
                raise InvalidSpec("{} has no parameter '{}'".format(type(self).__name__, key))
            setattr(self, key, value)

    @abstractmethod
    def _run(self, **kwargs):
        '''
        **kwargs: optional parameters passed through from `execute`.

        Abstract method where every scenario of the batch is run and reported.
        '''

    def setmeta(self, name=None, description=None):
        '''Update the name and description. Arguments left as None keep their value.'''
        if name is not None:
            self._name = name
        if description is not None:
            self._description = description

    def results_sorted(self, descending=True):
        '''
        Returns the results in sorted order.

        `descending` default true: should the `value` be sorted in descending order?
        '''
        return sorted(self._results, key=lambda x: x.value, reverse=descending)

    @property
    def results(self):
        '''Return the list of `BatchResult`s.'''
        return self._results

    @property
    def name(self):
        '''Return the name of this job.'''
        return self._name

    @property
    def description(self):
        '''Return the description of this job.'''
        return self._description

@dataclass
class BatchResult:
    '''
    Value:Description pair for one scenario, plus its full row of columns.

    value: `float` the headline number (seconds, edit score, margin...).

    descriptor: `str` the parameters of the scenario.

    data: `dict` every column written to the results file.
    '''
    value: float
    descriptor: str
    data: dict = field(default_factory=dict)

class BatchResultWriter:
    '''
    Writes the results of a `BatchJob` to a CSV file named after the job.

    Pass `on_batch_finish` as the job's callback.
    '''
    def __init__(self, target_dir, write_unique=False, sorted_results=False, desc=True):
        '''
        target_dir: `str` the directory to write into.

        write_unique: `bool` append a UTC timestamp to the file name.

        sorted_results: `bool` sort rows by result value.

        desc: `bool` descending order when sorting.
        '''
        self._target = target_dir
        self._unique = write_unique
        self._sort_results = sorted_results
        self._descending_results = desc
        self.last_path = None

    def on_batch_finish(self, job):
        '''Callback for `BatchJob`. Returns the path written.'''
        fpath = os.path.join(self._target, job.name)
        if self._unique:
            fpath += datetime.datetime.now(datetime.timezone.utc).strftime('_%Y%m%dT%H%M%S')
        fpath += '.csv'

        rows = job.results_sorted(self._descending_results) if self._sort_results else job.results
        columns = ['descriptor', 'value']
        for result in rows:
            for key in result.data:
                if key not in columns:
                    columns.append(key)

        with open(fpath, 'w', newline='') as output:
            writer = csv.DictWriter(output, fieldnames=columns)
            writer.writeheader()
            for result in rows:
                row = dict(result.data)
                row.update(descriptor=result.descriptor, value=result.value)
                writer.writerow(row)
        self.last_path = fpath
        return fpath

class ScalingBenchmark(BatchJob):
    '''
    Decode time against video length on a fixed random instance.

    Only the decoder call is timed. Each (mode, T) row reports the median of
    `repetitions` runs and a digest of the decoded labels, which must not
    change between repetitions.
    '''
    def __init__(self, name='bench', description='decode time vs video length', on_finish_callback=None,
                 lengths=(1000, 2000, 4000, 8000, 16000), num_classes=48, num_transitions=150,
                 repetitions=3, seed=0, modes=('hard', 'classical')):
        super().__init__(name, description, on_finish_callback)
        self.lengths = lengths
        self.num_classes = num_classes
        self.num_transitions = num_transitions
        self.repetitions = repetitions
        self.seed = seed
        self.modes = modes
        self.slopes = {}

    def _validate(self):
        lengths = [int(T) for T in self.lengths]
        if not lengths or any(b <= a for a, b in zip(lengths, lengths[1:])) or lengths[0] < 1:
            raise InvalidSpec("benchmark lengths must be positive and strictly increasing.")
        if int(self.repetitions) < 1:
            raise InvalidSpec("repetitions must be at least 1.")
        return lengths, [DecodeMode(m) for m in self.modes]

    def _run(self, **kwargs):
        self.prepare(**kwargs)
        lengths, modes = self._validate()
        rng = np.random.default_rng(self.seed)
        cs = random_instance(self.num_classes, self.num_transitions, rng)
        probs = {T: FrameProbMatrix(rng.dirichlet(np.ones(self.num_classes), size=T)) for T in lengths}

        self.slopes = {}
        for mode in modes:
            cfg = DecodeConfig(mode=mode, infeasible_fallback=Fallback.classical)
            medians = []
            for T in lengths:
                times, digests = [], set()
                for _ in range(int(self.repetitions)):
                    began = time.perf_counter()
                    result = decode_constrained(probs[T], cs, cfg)
                    times.append(time.perf_counter() - began)
                    digests.add(hashlib.sha256(result.labels.labels.tobytes()).hexdigest()[:16])
                median = float(np.median(times))
                medians.append(median)
                logger.info("bench %s T=%d: median %.4fs over %d runs", mode.value, T, median, len(times))
                self._report_result(BatchResult(median, "mode={} T={}".format(mode.value, T), {
                    'mode': mode.value, 'T': T, 'C': self.num_classes,
                    'transitions': len(cs.transitions), 'median_s': median,
                    'min_s': min(times), 'max_s': max(times), 'repetitions': len(times),
                    'digest': ';'.join(sorted(digests)), 'deterministic': len(digests) == 1,
                }))
            if len(lengths) > 1:
                self.slopes[mode.value] = float(linregress(np.log(lengths), np.log(medians)).slope)

    def table(self):
        '''Median seconds per T and mode, then the fitted log-log slopes.'''
        lines = ["{:>10}  {:>8}  {:>12}".format('mode', 'T', 'median (s)')]
        for r in self._results:
            lines.append("{:>10}  {:>8d}  {:>12.4f}".format(r.data['mode'], r.data['T'], r.value))
        for mode, slope in self.slopes.items():
            lines.append("slope[{}] = {:.3f}".format(mode, slope))
        return '\n'.join(lines)

def _decode_corpus(test, cs, cfg):
    # cfg None means frame-wise argmax.
    pairs, fallbacks = [], 0
    for gt, probs in test:
        if cfg is None:
            pred = probs.argmax()
        elif cfg.mode is DecodeMode.classical:
            pred = decode_classical(probs, cs.transitions, cfg).labels
        else:
            result = decode_constrained(probs, cs, cfg)
            fallbacks += int(result.used_fallback)
            pred = result.labels
        pairs.append((pred, gt))
    return evaluate_corpus(pairs), fallbacks

def _report_columns(prefix, report):
    head = prefix + '_' if prefix else ''
    cols = {head + 'acc': report.acc, head + 'edit': report.edit}
    for tau in DEFAULT_OVERLAPS:
        cols['{}f1_{:02d}'.format(head, int(round(tau * 100)))] = report.f1[tau]
    return cols

def _compare_seed(task):
    spec, seed, n_train, n_test, slack, cfg = task
    spec = spec.replace(seed=seed)
    train, test = generate_corpus(spec, n_train, n_test, rng=seed)
    cs = extract_constraints(train, spec.num_classes, slack=slack)
    argmax, _ = _decode_corpus(test, cs, None)
    classical, _ = _decode_corpus(test, cs, DecodeConfig(mode=DecodeMode.classical))
    constrained, fallbacks = _decode_corpus(test, cs, cfg)
    return seed, argmax, classical, constrained, fallbacks

class SyntheticComparison(BatchJob):
    '''
    Constrained decoding against classical Viterbi and frame-wise argmax
    over many synthetic corpora.

    Each seed draws its own corpus, extracts constraints from its training
    split and scores the three decoders on its test split. The result value
    is the edit-score margin of constrained over classical decoding;
    `summary` holds the means and a one-sided sign test over seeds.
    '''
    def __init__(self, name='compare', description='constrained vs classical decoding', on_finish_callback=None,
                 spec=None, num_classes=10, seeds=tuple(range(20)), n_train=50, n_test=20,
                 sigma=None, target_acc=None, slack=0.0, config=None, jobs=1):
        super().__init__(name, description, on_finish_callback)
        self.spec = spec
        self.num_classes = num_classes
        self.seeds = seeds
        self.n_train = n_train
        self.n_test = n_test
        self.sigma = sigma
        self.target_acc = target_acc
        self.slack = slack
        self.config = config
        self.jobs = jobs
        self.summary = {}

    def resolved_spec(self):
        '''The generator spec after defaults and noise calibration.'''
        spec = self.spec if self.spec is not None else GeneratorSpec.procedural(self.num_classes)
        if self.sigma is not None:
            spec = spec.replace(sigma=float(self.sigma))
        elif self.target_acc is not None:
            spec = spec.replace(sigma=calibrate_sigma(spec, self.target_acc, seed=spec.seed))
        return spec

    def _run(self, **kwargs):
        self.prepare(**kwargs)
        if not self.seeds:
            raise InvalidSpec("the comparison needs at least one seed.")
        spec = self.resolved_spec()
        cfg = self.config if self.config is not None else DecodeConfig(infeasible_fallback=Fallback.classical)
        tasks = [(spec, int(s), self.n_train, self.n_test, self.slack, cfg) for s in self.seeds]

        margins = []
        margin_stats = RunningStats()
        means = {'argmax': [], 'classical': [], 'constrained': []}
        for seed, argmax, classical, constrained, fallbacks in map_jobs(_compare_seed, tasks, self.jobs):
            margin = constrained.edit - classical.edit
            margins.append(margin)
            margin_stats.push(margin)
            for key, report in (('argmax', argmax), ('classical', classical), ('constrained', constrained)):
                means[key].append(report)
            data = {'seed': seed, 'sigma': spec.sigma, 'fallbacks': fallbacks, 'edit_margin': margin}
            data.update(_report_columns('argmax', argmax))
            data.update(_report_columns('classical', classical))
            data.update(_report_columns('constrained', constrained))
            self._report_result(BatchResult(margin, "seed={}".format(seed), data))
            logger.info("seed %d: edit %.2f constrained vs %.2f classical", seed, constrained.edit, classical.edit)

        wins = sum(m > 0 for m in margins)
        losses = sum(m < 0 for m in margins)
        trials = wins + losses
        p_value = binomtest(wins, trials, 0.5, alternative='greater').pvalue if trials else 1.0
        self.summary = {
            'sigma': spec.sigma,
            'seeds': len(margins),
            'mean_edit_margin': margin_stats.mean,
            'std_edit_margin': margin_stats.stddev,
            'wins': int(wins),
            'losses': int(losses),
            'sign_test_p': float(p_value),
        }
        for key, reports in means.items():
            self.summary[key + '_acc'] = float(np.mean([r.acc for r in reports]))
            self.summary[key + '_edit'] = float(np.mean([r.edit for r in reports]))

    def table(self):
        '''Mean metrics per decoder and the sign test.'''
        s = self.summary
        lines = ["{:>12}  {:>7}  {:>7}".format('decoder', 'Acc', 'Edit')]
        for key in ('argmax', 'classical', 'constrained'):
            lines.append("{:>12}  {:>7.2f}  {:>7.2f}".format(key, s[key + '_acc'], s[key + '_edit']))
        lines.append("edit margin {:+.2f} over {} seeds ({} wins, {} losses), sign test p = {:.4g}".format(
            s['mean_edit_margin'], s['seeds'], s['wins'], s['losses'], s['sign_test_p']))
        return '\n'.join(lines)

def default_variants():
    '''(name, DecodeConfig or None for argmax) pairs of the ablation table.'''
    fallback = Fallback.classical
    hard = DecodeConfig(infeasible_fallback=fallback)
    return [
        ('argmax', None),
        ('classical', DecodeConfig(mode=DecodeMode.classical)),
        ('start/end only', hard.replace(use_transitions=False, use_durations=False)),
        ('transitions only', hard.replace(use_start_end=False, use_durations=False)),
        ('durations only', hard.replace(use_start_end=False, use_transitions=False)),
        ('all, unweighted', hard.replace(w_transition=0.0)),
        ('all', hard),
        ('all, tracking', hard.replace(mode=DecodeMode.tracking)),
        ('soft, lambda=1', hard.replace(mode=DecodeMode.soft, soft_penalty=1.0)),
        ('soft, lambda=10', hard.replace(mode=DecodeMode.soft, soft_penalty=10.0)),
    ]

class AblationStudy(BatchJob):
    '''
    One synthetic corpus decoded with each constraint family on its own,
    all together, weighted and unweighted, hard and soft.
    '''
    def __init__(self, name='ablate', description='constraint ablation', on_finish_callback=None,
                 spec=None, num_classes=10, seed=0, n_train=50, n_test=20, slack=0.0, variants=None):
        super().__init__(name, description, on_finish_callback)
        self.spec = spec
        self.num_classes = num_classes
        self.seed = seed
        self.n_train = n_train
        self.n_test = n_test
        self.slack = slack
        self.variants = variants

    def _run(self, **kwargs):
        self.prepare(**kwargs)
        spec = self.spec if self.spec is not None else GeneratorSpec.procedural(self.num_classes, seed=self.seed)
        train, test = generate_corpus(spec, self.n_train, self.n_test, rng=self.seed)
        cs = extract_constraints(train, spec.num_classes, slack=self.slack)
        for label, cfg in (self.variants if self.variants is not None else default_variants()):
            report, fallbacks = _decode_corpus(test, cs, cfg)
            data = {'variant': label, 'fallbacks': fallbacks}
            data.update(_report_columns(None, report))
            self._report_result(BatchResult(report.edit, label, data))
            logger.info("ablation %s: edit %.2f", label, report.edit)

    def table(self):
        '''One row per variant.'''
        lines = ["{:<18}  {:>7}  {:>7}  {:>7}  {:>7}  {:>7}".format(
            'variant', 'Acc', 'Edit', 'F1@10', 'F1@25', 'F1@50')]
        for r in self._results:
            d = r.data
            lines.append("{:<18}  {:>7.2f}  {:>7.2f}  {:>7.2f}  {:>7.2f}  {:>7.2f}".format(
                r.descriptor, d['acc'], d['edit'], d['f1_10'], d['f1_25'], d['f1_50']))
        return '\n'.join(lines)

#==============================================#
# START FUNCTIONS
#==============================================#

def map_jobs(fn, items, jobs=1):
    '''
    Order-preserving map, fanned out over `jobs` worker processes when jobs > 1.
    '''
    items = list(items)
    if int(jobs) <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=int(jobs)) as pool:
        return list(pool.map(fn, items))

def random_instance(num_classes, num_transitions, rng):
    '''
    A random strongly connected constraint set.

    A ring i -> i+1 keeps every class reachable; the remaining
    `num_transitions - num_classes` pairs are drawn at random. Confidences
    are random and normalised per source class. The first quarter of the
    classes may start, the second half may end, and every segment may cover
    between 0.1% and 20% of the video.
    '''
    C = int(num_classes)
    if C < 2 or not C <= num_transitions <= C * (C - 1):
        raise InvalidSpec("need C >= 2 and C <= transitions <= C*(C-1).")
    pairs = {(i, (i + 1) % C) for i in range(C)}
    others = [(a, b) for a in range(C) for b in range(C) if a != b and (a, b) not in pairs]
    for k in rng.choice(len(others), size=num_transitions - C, replace=False):
        pairs.add(others[int(k)])

    weights = {pair: float(rng.uniform(0.1, 1.0)) for pair in sorted(pairs)}
    totals = {}
    for (a, _), w in weights.items():
        totals[a] = totals.get(a, 0.0) + w
    transitions = TransitionTable({(a, b): w / totals[a] for (a, b), w in weights.items()}, C)

    durations = DurationBounds(np.full(C, 0.001), np.full(C, 0.2))
    return ConstraintSet(C, range(max(1, C // 4)), range(C // 2, C), transitions, durations)
