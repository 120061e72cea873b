from .metrics import MetricsReport, build_report, compute_metrics, risk_coverage_score
from .mocks import build_mock_tools
from .runner import (
    DEFAULT_GUARDIAN_RULES,
    DEFAULT_SLA,
    HarnessEnv,
    ProbeResult,
    RunArtifacts,
    ScenarioResult,
    StepResult,
    run_bank,
    run_scenario,
)
from .scenarios import Scenario, ScenarioBank, load_scenarios, parse_scenario

__all__ = [
    "DEFAULT_GUARDIAN_RULES",
    "DEFAULT_SLA",
    "HarnessEnv",
    "MetricsReport",
    "ProbeResult",
    "RunArtifacts",
    "Scenario",
    "ScenarioBank",
    "ScenarioResult",
    "StepResult",
    "build_mock_tools",
    "build_report",
    "compute_metrics",
    "load_scenarios",
    "parse_scenario",
    "risk_coverage_score",
    "run_bank",
    "run_scenario",
]
