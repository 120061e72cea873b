"""Command-line entry point.

Exit codes are stable for CI embedding: 0 success, 1 domain failure
(invalid register, failed verification, lint errors), 2 usage error.
Every command takes --json for machine-readable output.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from . import jsoncanon
from .apg import build_apg, export_apg
from .config import load_config
from .errors import AgentSafeError, ParseError, PolicyTypeError, ValidationError
from .ledger import Ledger, LedgerKey, records_from_file, verify_chain
from .policy import has_errors, lint_policies, parse_policy
from .register import load_register
from .triage import InterruptibilitySLA, measure_interruptibility


def _echo(payload: dict, as_json: bool, text: str) -> None:
    click.echo(jsoncanon.dumps(payload) if as_json else text)


@click.group()
def main() -> None:
    """Runtime governance gateway, ledger tools, and the safety eval."""


@main.command()
@click.option("--register", "register_path", required=True, type=click.Path(exists=True))
@click.option("--json", "as_json", is_flag=True)
def validate(register_path: str, as_json: bool) -> None:
    """Load and cross-check a risk register."""
    try:
        register = load_register(Path(register_path).read_text(encoding="utf-8"))
    except (ParseError, ValidationError) as exc:
        _echo({"valid": False, "error": str(exc)}, as_json, f"invalid: {exc}")
        sys.exit(1)
    _echo(
        {
            "valid": True,
            "register_id": register.register_id,
            "capabilities": len(register.capabilities),
            "risks": len(register.risks),
        },
        as_json,
        f"ok: {register.register_id} ({len(register.capabilities)} capabilities, {len(register.risks)} risks)",
    )


@main.command()
@click.option("--policies", "policies_path", required=True, type=click.Path(exists=True))
@click.option("--register", "register_path", required=True, type=click.Path(exists=True))
@click.option("--json", "as_json", is_flag=True)
def lint(policies_path: str, register_path: str, as_json: bool) -> None:
    """Validate policies against a register; exit 1 on error diagnostics."""
    try:
        register = load_register(Path(register_path).read_text(encoding="utf-8"))
        policy_set = parse_policy(Path(policies_path).read_text(encoding="utf-8"))
    except (ParseError, PolicyTypeError, ValidationError) as exc:
        _echo({"error": str(exc)}, as_json, f"error: {exc}")
        sys.exit(1)
    diagnostics = lint_policies(policy_set, register)
    payload = {
        "policies": len(policy_set.policies),
        "digest": policy_set.source_digest,
        "diagnostics": [
            {"level": d.level, "code": d.code, "message": d.message, "policy": d.policy}
            for d in diagnostics
        ],
    }
    text = "\n".join(str(d) for d in diagnostics) or "clean"
    _echo(payload, as_json, text)
    if has_errors(diagnostics):
        sys.exit(1)


@main.command()
@click.option("--ledger", "ledger_path", required=True, type=click.Path(exists=True))
@click.option("--json", "as_json", is_flag=True)
def verify(ledger_path: str, as_json: bool) -> None:
    """Verify a ledger's hash chain, signatures, and sequence."""
    report = verify_chain(ledger_path)
    text = (
        f"valid ({report.records_checked} records)"
        if report.valid
        else f"INVALID at seq {report.first_bad_seq}: {report.failure}"
    )
    _echo(report.to_dict(), as_json, text)
    if not report.valid:
        sys.exit(1)


@main.command()
@click.option("--ledger", "ledger_path", required=True, type=click.Path(exists=True))
@click.option("--session", "session_id", required=True)
@click.option("--format", "fmt", type=click.Choice(["dot", "json"]), default="dot")
@click.option("--out", "out_path", type=click.Path(), default=None)
def apg(ledger_path: str, session_id: str, fmt: str, out_path: str | None) -> None:
    """Export one session's Action Provenance Graph."""
    report = verify_chain(ledger_path)
    if not report.valid:
        click.echo(f"INVALID ledger at seq {report.first_bad_seq}: {report.failure}")
        sys.exit(1)
    graph = build_apg(records_from_file(ledger_path), session_id)
    document = export_apg(graph, fmt)
    if out_path:
        Path(out_path).write_text(document + "\n", encoding="utf-8")
    else:
        click.echo(document)


@main.command()
@click.option("--ledger", "ledger_path", required=True, type=click.Path(exists=True))
@click.option("--max-halt-ms", default=200, show_default=True)
@click.option("--min-success-prob", default=0.999, show_default=True)
@click.option("--json", "as_json", is_flag=True)
def report(ledger_path: str, max_halt_ms: int, min_success_prob: float, as_json: bool) -> None:
    """Interruptibility SLA plus escalation statistics from a ledger."""
    chain = verify_chain(ledger_path)
    if not chain.valid:
        click.echo(f"INVALID ledger at seq {chain.first_bad_seq}: {chain.failure}")
        sys.exit(1)
    records = records_from_file(ledger_path)
    sla = measure_interruptibility(
        records, InterruptibilitySLA(max_halt_ms=max_halt_ms, min_success_prob=min_success_prob)
    )
    opened = sum(1 for r in records if r.kind == "escalation-opened")
    verdicts: dict[str, int] = {}
    for record in records:
        if record.kind == "escalation-decided":
            v = record.payload_obj().get("verdict", "?")
            verdicts[v] = verdicts.get(v, 0) + 1
    decided = sum(verdicts.values())
    override_rate = (verdicts.get("deny", 0) / decided) if decided else None
    payload = {
        "sla": sla.to_dict(),
        "escalations": {
            "opened": opened,
            "decided": verdicts,
            "override_rate": override_rate,
        },
    }
    text = (
        f"SLA: {sla.successes}/{sla.n} within {max_halt_ms}ms, meets_sla={sla.meets_sla}"
        + (" (vacuous)" if sla.vacuous else "")
        + f"\nescalations: opened={opened} decided={verdicts} override_rate={override_rate}"
    )
    _echo(payload, as_json, text)


@main.command()
@click.option("--bank", "bank_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--register", "register_path", required=True, type=click.Path(exists=True))
@click.option("--policies", "policies_path", required=True, type=click.Path(exists=True))
@click.option("--report", "report_path", required=True, type=click.Path())
@click.option("--seed", default=42, show_default=True)
@click.option("--json", "as_json", is_flag=True)
def eval(bank_dir: str, register_path: str, policies_path: str, report_path: str, seed: int, as_json: bool) -> None:
    """Replay the scenario bank and write the metrics report."""
    from .evalharness import (
        DEFAULT_GUARDIAN_RULES,
        DEFAULT_SLA,
        HarnessEnv,
        build_report,
        load_scenarios,
        run_bank,
    )

    try:
        register = load_register(Path(register_path).read_text(encoding="utf-8"))
        policy_set = parse_policy(Path(policies_path).read_text(encoding="utf-8"))
        bank = load_scenarios(bank_dir, register)
    except (ParseError, PolicyTypeError, ValidationError) as exc:
        click.echo(f"error: {exc}")
        sys.exit(1)
    for warning in bank.warnings:
        click.echo(f"warning: {warning}", err=True)
    env = HarnessEnv(
        register=register,
        policy_set=policy_set,
        guardian_rules=DEFAULT_GUARDIAN_RULES,
        sla=DEFAULT_SLA,
        seed=seed,
    )
    results, _ = run_bank(bank.scenarios, env)
    metrics = build_report(results, register)
    document = {
        "seed": seed,
        "policy_digest": policy_set.source_digest,
        "metrics": metrics.to_dict(),
        "warnings": list(bank.warnings),
        "scenarios": [r.to_dict() for r in results],
    }
    Path(report_path).write_text(jsoncanon.dumps(document) + "\n", encoding="utf-8")
    summary = (
        f"{metrics.scenarios_passed}/{metrics.scenarios_total} scenarios passed, "
        f"risk coverage score {metrics.risk_coverage_score:.4f}"
    )
    _echo({"report": report_path, **metrics.to_dict()}, as_json, summary)
    if metrics.scenarios_passed != metrics.scenarios_total:
        sys.exit(1)


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--register", "register_path", type=click.Path(exists=True), default=None)
@click.option("--policies", "policies_path", type=click.Path(exists=True), default=None)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8787, show_default=True)
def serve(config_path: str | None, register_path: str | None, policies_path: str | None, host: str, port: int) -> None:
    """Run the gateway HTTP service."""
    import uvicorn

    from .gateway import Gateway
    from .httpapi import build_app

    try:
        cfg = load_config(config_path)
        register_path = register_path or cfg.register_path
        policies_path = policies_path or cfg.policies_path
        if not register_path or not policies_path:
            raise ValidationError("serve needs --register/--policies or config register_path/policies_path")
        register = load_register(Path(register_path).read_text(encoding="utf-8"))
        policy_set = parse_policy(Path(policies_path).read_text(encoding="utf-8"))
        key = LedgerKey.load(cfg.key_path) if cfg.key_path and Path(cfg.key_path).exists() else LedgerKey.generate()
        if cfg.key_path and not Path(cfg.key_path).exists():
            key.save(cfg.key_path)
        ledger = Ledger(key, ledger_id=cfg.ledger_id, path=cfg.ledger_path)
    except (AgentSafeError, OSError) as exc:
        click.echo(f"error: {exc}")
        sys.exit(1)
    gateway = Gateway(
        register=register,
        policy_set=policy_set,
        ledger=ledger,
        guardian_rules=cfg.guardian_rules,
        drift_threshold=cfg.drift_threshold,
        drift_trigger_count=cfg.drift_trigger_count,
        drift_response_level=cfg.drift_response_level,
        nonmutating_actions=cfg.nonmutating_actions,
        escalation_timeout_s=cfg.escalation_timeout_s,
    )
    app = build_app(gateway, bearer_token=cfg.bearer_token)
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
