"""Two-stage active learning for maximum-likelihood estimation."""

import json as _json

from ._core import (
    ActiveMleError,
    DiagnosticsFailed,
    InfeasibleDesign,
    OracleExhausted,
    SingularMatrix,
    active_select,
    design_objective,
    e1_ej_rows,
    fisher,
    fit_mle,
    mix_with_uniform,
    mixing_alpha,
    nll,
    nll_gradient,
    rate_constant,
    sdp_form,
    solve_design,
    verify,
)
from ._core import run_scenario as _run_scenario


def run_scenario(scenario, threads=0):
    """Run a scenario (dict or JSON string) and return the report as a dict."""
    text = scenario if isinstance(scenario, str) else _json.dumps(scenario)
    return _json.loads(_run_scenario(text, threads))
