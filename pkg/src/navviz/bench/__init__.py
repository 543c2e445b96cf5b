"""Five-mode visualization benchmark harness.

Runs the client pipeline against the simulated robot in each visualization
mode, many trials per mode, and reports update rate (the fps analogue),
per-tick processing cost, and time from goal publish to the plan entering
the scene.
"""

from .report import (BoxStats, ModeAggregate, ModeSpec, MODE_LABELS, Report,
                     SummaryStats, TrialResult, aggregate, box_stats,
                     make_fingerprint, quantile_linear, render_report,
                     summarize)
from .runner import (SimUnreachable, TrialConfig, TrialFailure, TrialTimeout,
                     run_experiment, run_trial, subscriptions_for)
from .lockstep import LockstepConfig, run_lockstep_experiment, run_lockstep_trial

__all__ = [
    "BoxStats", "LockstepConfig", "MODE_LABELS", "ModeAggregate", "ModeSpec",
    "Report", "SimUnreachable", "SummaryStats", "TrialConfig", "TrialFailure",
    "TrialResult", "TrialTimeout", "aggregate", "box_stats",
    "make_fingerprint", "quantile_linear", "render_report",
    "run_experiment", "run_lockstep_experiment", "run_lockstep_trial",
    "run_trial", "subscriptions_for", "summarize",
]
