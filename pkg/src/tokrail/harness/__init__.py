from .fixtures import list_fixtures, load_contract_spec, load_suite
from .models import DISTRACTORS, EOS_TEXT, FailureProneModel, ScriptedModel, build_failure_vocab
from .report import build_report, compare, format_compare, run_metrics, schema_valid, strip_timing
from .suite import gen_training_data, run_suite, run_task, write_trajectory_log
from .sweep import threshold_sweep
from .targets import make_target

__all__ = [
    "DISTRACTORS",
    "EOS_TEXT",
    "FailureProneModel",
    "ScriptedModel",
    "build_failure_vocab",
    "build_report",
    "compare",
    "format_compare",
    "gen_training_data",
    "list_fixtures",
    "load_contract_spec",
    "load_suite",
    "make_target",
    "run_metrics",
    "run_suite",
    "run_task",
    "schema_valid",
    "strip_timing",
    "threshold_sweep",
    "write_trajectory_log",
]
