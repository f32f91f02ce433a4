"""
Evaluation: accuracy curves, confusion matrices, Monte-Carlo runs,
reference data and report files.

"""

from cfamc.eval.evaluate import EvalReport, MonteCarloStats, evaluate, combine_reports
from cfamc.eval.harness import OracleModel, ConstantModel
from cfamc.eval.montecarlo import PipelineConfig, StaticPipeline, monte_carlo_evaluate
from cfamc.eval.reference import ReferenceCurve, reference_curves, reference_curve
from cfamc.eval.reference import reference_flops_table, reference_hybrid_table
from cfamc.eval.reference import reference_mflops, CURVE_TAGS
from cfamc.eval.report import emit_report, load_reports, csv_rows
