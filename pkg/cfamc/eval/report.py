"""
Report emission: CSV, YAML summary and the accuracy plot.

Files written to ``out_dir``:

``accuracy.csv``
    ``section,series,key_1,key_2,value`` rows, sections ``overall``,
    ``egc_snr``, ``mean_snr``, ``confusion``, ``mc_run`` and
    ``reference`` (accuracies as fractions, confusion cells as counts)
``summary.yaml``
    per series: records, accuracy, Monte-Carlo statistics
``report.yaml``
    full reports, reloadable with :any:`load_reports`
``accuracy_vs_mean_snr.png``
    measured curves over the reference curves

"""

import csv
import os
from collections import OrderedDict

import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402
import yaml  # noqa: E402

from cfamc.exceptions import CfamcPersistenceError  # noqa: E402
from cfamc.eval.evaluate import EvalReport  # noqa: E402
from cfamc.utils.coerce import to_builtin  # noqa: E402
from cfamc.utils.logger import logger  # noqa: E402

CSV_NAME = 'accuracy.csv'
SUMMARY_NAME = 'summary.yaml'
REPORT_NAME = 'report.yaml'
PLOT_NAME = 'accuracy_vs_mean_snr.png'
CSV_FIELDS = ('section', 'series', 'key_1', 'key_2', 'value')


def _as_series(reports):
    if isinstance(reports, EvalReport):
        return OrderedDict([('measured', reports)])
    return OrderedDict(reports)


def csv_rows(reports, reference=()):
    """ Rows of ``accuracy.csv`` without the header """
    rows = []
    for series, report in reports.items():
        rows.append(('overall', series, '', '', report.accuracy))
        rows.extend(('egc_snr', series, snr, '', acc) for snr, acc in report.egc_curve)
        rows.extend(('mean_snr', series, snr, '', acc) for snr, acc in report.mean_snr_curve)
        names = report.class_names()
        for i, true_name in enumerate(names):
            for j, predicted_name in enumerate(names):
                rows.append(('confusion', series, true_name, predicted_name,
                             int(report.confusion[i, j])))
        if report.mc is not None:
            rows.extend(('mc_run', series, i, '', acc)
                        for i, acc in enumerate(report.mc.accuracies))
    for curve in reference:
        rows.extend(('reference', curve.tag, snr, '', acc / 100.0) for snr, acc in curve.points)
    return rows


def summary(reports):
    data = OrderedDict()
    for series, report in reports.items():
        entry = OrderedDict([('n_records', report.n_records), ('accuracy', report.accuracy),
                             ('n_ru', report.n_ru)])
        if report.mc is not None:
            entry['mc'] = OrderedDict([('n_runs', report.mc.n_runs),
                                       ('mean', report.mc.mean), ('std', report.mc.std)])
        data[series] = dict(entry)
    return data


def plot_accuracy(reports, reference, path):
    figure, axis = plt.subplots(figsize=(7, 5))
    for curve in reference:
        axis.plot(curve.snr_db, curve.accuracy_pct, linestyle='--', marker='.',
                  label='reference: {}'.format(curve.tag))
    for series, report in reports.items():
        curve = report.mean_snr_curve
        axis.plot([s for s, _ in curve], [100.0 * a for _, a in curve], marker='o',
                  label=series)
    axis.set_xlabel('Mean-SNR (dB)')
    axis.set_ylabel('Accuracy (%)')
    axis.grid(True)
    axis.legend(loc='lower right', fontsize='small')
    figure.tight_layout()
    figure.savefig(path, metadata={'Software': None})
    plt.close(figure)


def _dump_yaml(data, path):
    with open(path, 'w') as f:
        yaml.safe_dump(to_builtin(data), f, sort_keys=False)


def emit_report(reports, reference, out_dir):
    """
    Writes the report files.

    Args:
        reports: an :any:`EvalReport` or a mapping series name -> report
        reference: iterable of :any:`ReferenceCurve`, may be empty
        out_dir (str): created if missing

    Returns:
        (``dict``): file kind -> path

    Raises:
        :class:`CfamcPersistenceError`: ``out_dir`` not writable
    """
    reports = _as_series(reports)
    reference = tuple(reference or ())
    paths = OrderedDict((kind, os.path.join(out_dir, name)) for kind, name in
                        (('csv', CSV_NAME), ('summary', SUMMARY_NAME),
                         ('report', REPORT_NAME), ('plot', PLOT_NAME)))
    try:
        if not os.path.isdir(out_dir):
            os.makedirs(out_dir)
        with open(paths['csv'], 'w', newline='') as f:
            writer = csv.writer(f)
            writer.writerow(CSV_FIELDS)
            writer.writerows(csv_rows(reports, reference))
        _dump_yaml(summary(reports), paths['summary'])
        _dump_yaml(dict((s, dict(r.as_dict())) for s, r in reports.items()), paths['report'])
        plot_accuracy(reports, reference, paths['plot'])
    except (IOError, OSError) as exc:
        raise CfamcPersistenceError(out_dir, exc)
    logger.info('Report written to {}'.format(out_dir))
    return paths


def load_reports(path):
    """ Reports saved by :any:`emit_report`, from ``report.yaml`` or its directory """
    if os.path.isdir(path):
        path = os.path.join(path, REPORT_NAME)
    try:
        with open(path) as f:
            data = yaml.safe_load(f)
    except (IOError, OSError) as exc:
        raise CfamcPersistenceError(path, exc)
    return OrderedDict((series, EvalReport.from_dict(d)) for series, d in data.items())
