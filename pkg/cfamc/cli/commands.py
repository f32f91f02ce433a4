"""
Command-line entry point.

    $ python -m cfamc gen-data --preset desk --out runs/desk
    $ python -m cfamc train --config experiment.yaml
    $ python -m cfamc flops --preset paper
    $ python -m cfamc eval --config experiment.yaml --checkpoint runs/desk/train/central-128x4/central.ckpt
    $ python -m cfamc report --from runs/desk/eval --out runs/desk/report

Exit codes:

    0  success
    2  invalid configuration or argument
    3  I/O failure or corrupt data
    4  training diverged
    5  checkpoint does not match the configured model or data

"""

import argparse
import csv
import os
import sys
from collections import OrderedDict

from cfamc import __version__
from cfamc.exceptions import CfamcException, CfamcConfigError, CfamcValueError
from cfamc.exceptions import CfamcCoerceError, CfamcNotFound, CfamcContractError
from cfamc.exceptions import CfamcPersistenceError, CfamcCorruptDataError
from cfamc.exceptions import CfamcDivergenceError, CfamcIncompatibleSpecError
from cfamc.exceptions import CfamcPartialResultsError
from cfamc.cli.config import RunConfig, PRESETS
from cfamc.dataset.generate import generate_dataset
from cfamc.model.spec import ModelSpec, ModelKind
from cfamc.model.models import restore_model
from cfamc.model.weights import WeightBundle
from cfamc.training.pipelines import DataStreams, train_central_pipeline
from cfamc.training.pipelines import train_distributed_pipeline, train_hybrid_pipeline
from cfamc.flops import estimate_model_flops, CONVENTION
from cfamc.eval.evaluate import evaluate
from cfamc.eval.harness import OracleModel
from cfamc.eval.montecarlo import PipelineConfig, StaticPipeline, monte_carlo_evaluate
from cfamc.eval.reference import reference_curves, reference_mflops
from cfamc.eval.report import emit_report, load_reports
from cfamc.utils.logger import logger

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_DIVERGED = 4
EXIT_MISMATCH = 5

EXIT_CODES = (
    (CfamcIncompatibleSpecError, EXIT_MISMATCH),
    (CfamcDivergenceError, EXIT_DIVERGED),
    (CfamcPersistenceError, EXIT_IO),
    (CfamcCorruptDataError, EXIT_IO),
    (CfamcConfigError, EXIT_CONFIG),
    (CfamcValueError, EXIT_CONFIG),
    (CfamcCoerceError, EXIT_CONFIG),
    (CfamcNotFound, EXIT_CONFIG),
    (CfamcContractError, EXIT_CONFIG),
)

FLOPS_FIELDS = ('approach', 'spec', 'input_size', 'n_stacks', 'du_input_size', 'du_stacks',
                'n_ru', 'per_ru_flops', 'du_flops', 'total_flops', 'mflops',
                'reference_mflops', 'ratio_to_reference')


def exit_code(exc):
    if isinstance(exc, CfamcPartialResultsError):
        return exit_code(exc.cause)
    for exc_type, code in EXIT_CODES:
        if isinstance(exc, exc_type):
            return code
    return EXIT_CONFIG


def _config(args):
    return RunConfig.load(args.config, preset=args.preset, seed=args.seed, out=args.out)


def cmd_gen_data(args):
    """ Generates the configured dataset into ``dataset_dir`` """
    config = _config(args)
    logger.title('Generating dataset: {} records'.format(config.dataset.total_records))
    manifest = generate_dataset(config.dataset, config.dataset_dir)
    print('manifest: {}'.format(manifest.path))
    print('records: {}'.format(manifest.total_records))
    for split, count in manifest.counts.items():
        print('  {}: {}'.format(split, count))
    return EXIT_OK


def _train_point(config, streams, input_size, n_stacks, du_input_size=None, run_dir=None):
    grid, hp = config.model, config.hyperparams
    if grid.approach == 'central':
        return train_central_pipeline(grid.central_spec(input_size, n_stacks), streams, hp,
                                      run_dir)
    if grid.approach == 'distributed':
        return train_distributed_pipeline(grid.ru_spec(input_size, n_stacks), grid.n_ru,
                                          streams, hp, run_dir,
                                          ru_weights=config.checkpoint('ru'))
    return train_hybrid_pipeline(grid.ru_spec(input_size, n_stacks),
                                 grid.du_spec(du_input_size), grid.n_ru, streams, hp, run_dir,
                                 ru_weights=config.checkpoint('ru'),
                                 du_weights=config.checkpoint('du'))


def _grid_points(config):
    grid = config.model
    du_sizes = grid.du_input_sizes if grid.approach == 'hybrid' else [None]
    return [(size, stacks, du) for size, stacks in grid.pairs() for du in du_sizes]


def _point_name(config, input_size, n_stacks, du_input_size):
    name = '{}-{}x{}'.format(config.model.approach, input_size, n_stacks)
    if du_input_size is not None:
        name += '+{}x{}'.format(du_input_size, config.model.du_stacks)
    return name


def cmd_train(args):
    """ Trains every grid point of the configured approach """
    config = _config(args)
    manifest = config.require_manifest()
    streams = DataStreams.from_manifest(manifest, config.hyperparams.batch_size)
    for input_size, n_stacks, du_size in _grid_points(config):
        name = _point_name(config, input_size, n_stacks, du_size)
        logger.title('Training {}'.format(name))
        run_dir = config.out_path('train', name)
        result = _train_point(config, streams, input_size, n_stacks, du_size, run_dir)
        paths = result.save(run_dir)
        for phase, phase_result in result.phases.items():
            print('{} [{}]: best epoch {}, val accuracy {:.4f}'.format(
                name, phase, phase_result.best_epoch, phase_result.best_val_accuracy))
        for component, path in sorted(paths.items()):
            print('{} [{}]: {}'.format(name, component, path))
    return EXIT_OK


def _flops_specs(config):
    grid = config.model
    for input_size, n_stacks in grid.pairs():
        central = grid.central_spec(input_size, n_stacks)
        yield 'central', central
        yield 'distributed', central.distributed(max(grid.n_ru, 1))
        if grid.approach == 'hybrid':
            for du_size in grid.du_input_sizes:
                yield 'hybrid', central.hybrid(du_size, grid.du_stacks, grid.n_ru)


def cmd_flops(args):
    """ FLOP report per grid point and approach """
    config = _config(args)
    out_dir = config.out_path('flops')
    try:
        if not os.path.isdir(out_dir):
            os.makedirs(out_dir)
    except OSError as exc:
        raise CfamcPersistenceError(out_dir, exc)
    rows = []
    for approach, spec in _flops_specs(config):
        report = estimate_model_flops(spec)
        report.write_csv(os.path.join(out_dir, '{}.csv'.format(spec.spec_id)))
        reference = reference_mflops(approach, spec.input_size, spec.n_stacks)
        rows.append(OrderedDict([
            ('approach', approach), ('spec', spec.spec_id), ('input_size', spec.input_size),
            ('n_stacks', spec.n_stacks), ('du_input_size', spec.du_input_size or ''),
            ('du_stacks', spec.du_stacks or ''), ('n_ru', report.n_ru),
            ('per_ru_flops', report.per_ru), ('du_flops', report.du),
            ('total_flops', report.total), ('mflops', round(report.mflops, 4)),
            ('reference_mflops', '' if reference is None else reference),
            ('ratio_to_reference', '' if reference is None else round(report.mflops / reference, 3)),
        ]))
        print('{:<40} {:>12.3f} MFLOPs'.format(spec.spec_id, report.mflops))
    path = os.path.join(out_dir, 'flops.csv')
    try:
        with open(path, 'w', newline='') as f:
            f.write('# {}\n'.format(CONVENTION))
            writer = csv.DictWriter(f, fieldnames=FLOPS_FIELDS)
            writer.writeheader()
            writer.writerows(rows)
    except (IOError, OSError) as exc:
        raise CfamcPersistenceError(path, exc)
    print('flops: {}'.format(path))
    return EXIT_OK


def _load_checkpoint_model(path, streams):
    bundle = WeightBundle.load(path)
    spec = bundle.spec
    if spec.kind in (ModelKind.RU, ModelKind.DU_FEATURE, ModelKind.VOTING):
        raise CfamcIncompatibleSpecError([spec.spec_id], 'not a complete classifier')
    if spec.n_ru != streams.n_ru and not (spec.kind is ModelKind.HYBRID and spec.n_ru == 0):
        raise CfamcIncompatibleSpecError([spec.spec_id], 'dataset has {} RUs'.format(streams.n_ru))
    largest = max(spec.input_size, spec.du_input_size or 0)
    if largest > streams.frame_len:
        raise CfamcIncompatibleSpecError([spec.spec_id],
                                         'frame_len {}'.format(streams.frame_len))
    return restore_model(bundle)


def cmd_eval(args):
    """ Evaluates a checkpoint, the oracle, or Monte-Carlo retrained grid points """
    config = _config(args)
    manifest = config.require_manifest()
    streams = DataStreams.from_manifest(manifest, config.hyperparams.batch_size)
    reports = OrderedDict()
    if args.oracle:
        reports['oracle'] = monte_carlo_evaluate(StaticPipeline(OracleModel(), streams.test),
                                                 config.mc_runs)
    elif args.checkpoint:
        model = _load_checkpoint_model(args.checkpoint, streams)
        if config.mc_runs > 1:
            logger.warning('mc_runs ignored for a fixed checkpoint')
        reports[model.spec.spec_id] = evaluate(model, streams.test)
    else:
        grid = config.model
        for input_size, n_stacks, du_size in _grid_points(config):
            name = _point_name(config, input_size, n_stacks, du_size)
            logger.title('Evaluating {} over {} run(s)'.format(name, config.mc_runs))
            if grid.approach == 'central':
                spec, du_spec = grid.central_spec(input_size, n_stacks), None
            else:
                spec = grid.ru_spec(input_size, n_stacks)
                du_spec = grid.du_spec(du_size) if du_size is not None else None
            pipeline = PipelineConfig(grid.approach, spec, streams, config.hyperparams,
                                      n_ru=grid.n_ru, du_spec=du_spec,
                                      ru_weights=config.checkpoint('ru'),
                                      du_weights=config.checkpoint('du'),
                                      run_dir=config.out_path('eval', name))
            reports[name] = monte_carlo_evaluate(pipeline, config.mc_runs)
    reference = () if args.no_reference else reference_curves()
    paths = emit_report(reports, reference, config.out_path('eval'))
    for series, report in reports.items():
        print('{}: accuracy {:.4f} over {} records'.format(series, report.accuracy,
                                                           report.n_records))
    print('report: {}'.format(paths['csv']))
    return EXIT_OK


def cmd_report(args):
    """ Re-emits report files from a saved ``report.yaml`` """
    reports = load_reports(args.source)
    source = os.path.abspath(args.source)
    out_dir = args.out or (source if os.path.isdir(source) else os.path.dirname(source))
    reference = () if args.no_reference else reference_curves()
    paths = emit_report(reports, reference, out_dir)
    print('report: {}'.format(paths['csv']))
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog='cfamc', description='Cell-free AMC toolkit')
    parser.add_argument('--version', action='version', version=__version__)
    commands = parser.add_subparsers(dest='command')
    commands.required = True

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', metavar='PATH', help='experiment YAML file')
    common.add_argument('--preset', choices=sorted(PRESETS), default='desk')
    common.add_argument('--out', metavar='DIR', help='output root')
    common.add_argument('--seed', type=int, metavar='U64', help='experiment seed')
    common.add_argument('--verbose', action='store_true', help='debug logging')
    common.add_argument('--quiet', action='store_true', help='no logging')

    commands.add_parser('gen-data', parents=[common], help='generate the dataset') \
        .set_defaults(func=cmd_gen_data)
    commands.add_parser('train', parents=[common], help='train the model grid') \
        .set_defaults(func=cmd_train)
    commands.add_parser('flops', parents=[common], help='FLOP report for the grid') \
        .set_defaults(func=cmd_flops)

    evaluation = commands.add_parser('eval', parents=[common], help='evaluate on the test split')
    evaluation.add_argument('--checkpoint', metavar='PATH', help='model.ckpt to evaluate')
    evaluation.add_argument('--oracle', action='store_true', help='evaluate the oracle model')
    evaluation.add_argument('--no-reference', action='store_true', help='omit reference curves')
    evaluation.set_defaults(func=cmd_eval)

    report = commands.add_parser('report', help='re-emit a saved evaluation')
    report.add_argument('--from', dest='source', required=True, metavar='PATH',
                        help='report.yaml or its directory')
    report.add_argument('--out', metavar='DIR', help='output directory')
    report.add_argument('--no-reference', action='store_true', help='omit reference curves')
    report.add_argument('--verbose', action='store_true', help='debug logging')
    report.add_argument('--quiet', action='store_true', help='no logging')
    report.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    """ Runs one command; returns its exit code """
    args = build_parser().parse_args(argv)
    if args.quiet:
        logger.disable()
    elif args.verbose:
        logger.verbose(True)
    try:
        return args.func(args)
    except CfamcException as exc:
        code = exit_code(exc)
        logger.error(str(exc))
        print('error: {}'.format(exc), file=sys.stderr)
        return code
