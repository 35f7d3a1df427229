"""
Command-line front end: deformation, action, verify and check
"""

import argparse
import logging
import sys
from typing import Any, Dict, List, Optional, Sequence, Tuple

from pydantic import ValidationError

from lubin_tate.config import Settings, load_settings
from lubin_tate.fgl import f_closed_form, p_series, universal_F
from lubin_tate.models import (
    CoefficientDomain,
    CommandResult,
    DeformationParams,
    RunConfig,
    Violation,
)
from lubin_tate.oracle import cocycle_probe, residual, solve_action, tracked_violations
from lubin_tate.report import (
    ReportError,
    ReportWriter,
    action_text,
    cocycle_text,
    deformation_text,
    load_action_dump,
    params_json,
    verify_text,
    violations_text,
)
from lubin_tate.scalars import ExtensionField, FieldElement
from lubin_tate.stabilizer import ActionData, GroupElement, stabilizer_ring, unfold_action
from lubin_tate.verifier import (
    CASES,
    CaseOptions,
    DomainError,
    VerificationError,
    closed_form_f_cost,
    residual_cost,
    run_verification,
    select_cases,
    solve_cost,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

# Error codes that mean a computation contradicted itself rather than bad input
FAILURE_CODES = {"INCONSISTENT", "NO_CONVERGENCE", "INTEGRALITY_FAILURE"}


class CommandError(Exception):
    """Exception raised for a request the commands refuse to run"""

    def __init__(self, message: str, error_code: str):
        self.message = message
        self.error_code = error_code
        super().__init__(self.message)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lubin-tate",
        description="Lubin-Tate deformations and the Morava stabilizer group action modulo p",
    )
    parser.add_argument("--verbose", "-v", action="count", default=0, help="More logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--p", type=int, default=3, help="Prime (default 3)")
        p.add_argument("--h", type=int, default=3, help="Height (default 3)")
        p.add_argument("--x-order", type=int, help="Univariate truncation (default p^(2h-1)+1)")
        p.add_argument("--u-order", type=int, help="u-adic truncation (default p^(h-1)+Phi(h))")
        p.add_argument("--xy-order", type=int, help="Bivariate truncation (default p^h+1)")
        p.add_argument("--format", choices=["text", "json"], default="text")
        p.add_argument("--out", help="Output file (a default name under the output dir for json)")
        p.add_argument("--allow-heavy", action="store_true", help="Run cells above the term cap")

    deformation = sub.add_parser("deformation", help="log, exp, F and the p-series")
    common(deformation)
    deformation.add_argument(
        "--closed-form", action="store_true", help="Also build and compare the closed form of F"
    )

    action = sub.add_parser("action", help="t_0, ..., t_h for a group element")
    common(action)
    action.add_argument("--engine", choices=["unfold", "solve", "both"], default="unfold")
    action.add_argument("--identity", action="store_true", help="Use the identity element")
    action.add_argument("--cocycle", action="store_true", help="Run the composition probe")
    action.add_argument("--g-values", help="Comma-separated g_0,...,g_h in F_(p^h), e.g. 'a+1,0,a'")
    action.add_argument("--modulus", help="Comma-separated monic modulus, constant term first")

    verify = sub.add_parser("verify", help="Run verification cases")
    common(verify)
    verify.add_argument(
        "--case", action="append", default=[], choices=list(CASES), help="Case tag (repeatable)"
    )
    verify.add_argument("--all", action="store_true", help="Run every case")
    verify.add_argument("--seed", type=int, default=0, help="Seed for randomized cases")
    verify.add_argument("--samples", type=int, default=200, help="Samples per randomized case")
    verify.add_argument("--workers", type=int, help="Process pool size")

    check = sub.add_parser("check", help="Re-verify an action dump")
    check.add_argument("--input", required=True, help="JSON dump written by 'action'")
    check.add_argument("--format", choices=["text", "json"], default="text")
    check.add_argument("--out")
    check.add_argument("--allow-heavy", action="store_true")
    return parser


def config_from_args(args: argparse.Namespace, settings: Settings) -> RunConfig:
    """Validated RunConfig from parsed arguments and environment defaults"""
    values: Dict[str, Any] = {
        "command": args.command,
        "output_format": args.format,
        "output_path": args.out,
        "allow_heavy": args.allow_heavy or settings.allow_heavy,
        "max_workers": getattr(args, "workers", None) or settings.max_workers,
    }
    for name in ("p", "h", "x_order", "u_order", "xy_order", "engine", "seed", "samples"):
        value = getattr(args, name, None)
        if value is not None:
            values[name] = value
    values["cases"] = getattr(args, "case", [])
    values["run_all"] = getattr(args, "all", False)
    values["input_path"] = getattr(args, "input", None)
    for name in ("closed_form", "identity", "cocycle"):
        values[name] = getattr(args, name, False)
    values["g_values"] = getattr(args, "g_values", None)
    values["modulus"] = getattr(args, "modulus", None)
    return RunConfig(**values)


def _config_json(config: RunConfig, params: Optional[DeformationParams]) -> Dict[str, Any]:
    data = config.model_dump(mode="json", exclude_none=True)
    if params is not None:
        data["params"] = params_json(params)
    return data


def _default_out(config: RunConfig, settings: Settings, params: DeformationParams) -> Optional[str]:
    if config.output_path or config.output_format != "json":
        return config.output_path
    return f"{settings.output_dir}/{config.command}_p{params.p}_h{params.h}.json"


def _gate(cost: int, what: str, config: RunConfig, settings: Settings) -> None:
    if cost > settings.term_cap and not config.allow_heavy:
        raise CommandError(
            f"{what} estimated at {cost} terms, above the cap {settings.term_cap}; "
            "pass --allow-heavy or raise LUBIN_TATE_TERM_CAP",
            error_code="INFEASIBLE",
        )


def cmd_deformation(config: RunConfig, settings: Settings) -> CommandResult:
    """Compute and dump log, exp, F and both p-series"""
    params = config.deformation_params()
    if config.closed_form and params.h <= 2:
        raise CommandError(
            f"The closed form of F is stated for h > 2, got h = {params.h}",
            error_code="UNSUPPORTED_HEIGHT",
        )
    _gate(closed_form_f_cost(params), "Building F", config, settings)

    fgl = universal_F(params)
    reduced = p_series(fgl, params.with_domain(CoefficientDomain.MOD_P))
    results: Dict[str, Any] = {**fgl.to_json(), "reduced_p_series": reduced.to_json()}
    text = deformation_text(fgl, reduced)
    if config.closed_form:
        first = f_closed_form(params).first_difference(fgl.F)
        results["closed_form_agrees"] = first is None
        text += "\n\nClosed form: " + (
            "agrees with exp(log x + log y)" if first is None else f"differs at {list(first)}"
        )

    writer = ReportWriter(config.output_format)
    content = writer.render(_config_json(config, params), results, text)
    path = writer.save(content, _default_out(config, settings, params))
    return CommandResult(success=True, data={"output": content, "path": path})


def parse_concrete_values(
    config: RunConfig, params: DeformationParams
) -> Optional[Tuple[ExtensionField, List[FieldElement]]]:
    """(field, values) from --g-values/--modulus, or None when not requested"""
    if config.g_values is None and config.modulus is None:
        return None
    if config.g_values is None or config.modulus is None:
        raise CommandError("--g-values needs --modulus and vice versa", error_code="BAD_ELEMENT")
    try:
        modulus = [int(c) for c in config.modulus.split(",")]
    except ValueError:
        raise CommandError(f"Malformed modulus {config.modulus!r}", error_code="BAD_ELEMENT")
    field_ = ExtensionField(params.p, modulus)
    if field_.degree != params.h:
        raise CommandError(
            f"Modulus has degree {field_.degree}, F_(p^h) needs {params.h}",
            error_code="BAD_ELEMENT",
        )
    values: List[FieldElement] = [field_.parse_element(v) for v in config.g_values.split(",")]
    if len(values) > params.h + 1:
        raise CommandError(f"At most h+1 = {params.h + 1} values", error_code="BAD_ELEMENT")
    values += [field_.zero()] * (params.h + 1 - len(values))
    GroupElement.concrete(field_, values)
    return field_, values


def _element(config: RunConfig, params: DeformationParams, normalized: bool) -> GroupElement:
    ring = stabilizer_ring(params)
    if config.identity:
        return GroupElement.identity(ring)
    return GroupElement.symbolic(ring, normalized=normalized)


def _residual_report(
    data: ActionData,
    g: GroupElement,
    params: DeformationParams,
    config: RunConfig,
    settings: Settings,
) -> Optional[Dict[str, Any]]:
    if residual_cost(params) > settings.term_cap and not config.allow_heavy:
        logger.warning("Residual skipped: above the term cap")
        return None
    violations = tracked_violations(residual(data, g, params), data.accuracy, params)
    return {
        "status": "pass" if not violations else "fail",
        "violations": [v.model_dump() for v in violations],
    }


def cmd_action(config: RunConfig, settings: Settings) -> CommandResult:
    """Compute t_0, ..., t_h with the chosen engine(s) and dump them"""
    params = config.deformation_params()
    writer = ReportWriter(config.output_format)

    if config.cocycle:
        probe = cocycle_probe(params)
        content = writer.render(
            _config_json(config, params), probe.model_dump(), cocycle_text(probe)
        )
        path = writer.save(content, _default_out(config, settings, params))
        return CommandResult(success=True, data={"output": content, "path": path})

    concrete = parse_concrete_values(config, params)
    normalized = concrete is None or concrete[1][0] == concrete[0].one()
    g = _element(config, params, normalized)

    actions: List[ActionData] = []
    if config.engine in ("unfold", "both"):
        actions.append(unfold_action(g, params))
    if config.engine in ("solve", "both"):
        _gate(solve_cost(params), "solve_action", config, settings)
        actions.append(solve_action(g, params))
    diff = actions[0].first_disagreement(actions[1]) if len(actions) == 2 else None

    results: Dict[str, Any] = {
        "element": "identity" if config.identity else ("normalized" if normalized else "general"),
        "actions": [a.to_json() for a in actions],
        "diff": None if diff is None else {"index": diff[0], "u_degree": diff[1]},
    }
    text = action_text(actions, diff, compared=len(actions) == 2)
    if normalized:
        report = _residual_report(actions[0], g, params, config, settings)
        results["residual"] = report
        if report is not None:
            text += "\n\n" + violations_text([Violation(**v) for v in report["violations"]])
    if concrete is not None:
        field_, values = concrete
        evaluated = actions[0].evaluate(field_, values)
        results["evaluated"] = [
            {str(d): field_.format_element(v) for d, v in t.items()} for t in evaluated
        ]
        lines = ["Evaluated at the given F_(p^h) values:"]
        for i, t in enumerate(evaluated):
            body = " + ".join(f"({field_.format_element(v)}) u^{d}" for d, v in t.items()) or "0"
            lines.append(f"  t_{i} = {body}")
        text += "\n\n" + "\n".join(lines)

    content = writer.render(_config_json(config, params), results, text)
    path = writer.save(content, _default_out(config, settings, params))
    return CommandResult(success=True, data={"output": content, "path": path})


def cmd_verify(config: RunConfig, settings: Settings) -> CommandResult:
    """Run the selected verification cases; exit 1 on any failure"""
    params = config.deformation_params()
    tags = select_cases(config.cases, config.run_all)
    options = CaseOptions(
        seed=config.seed,
        samples=config.samples,
        allow_heavy=config.allow_heavy,
        term_cap=settings.term_cap,
    )
    report = run_verification(tags, params, options, config.max_workers)
    writer = ReportWriter(config.output_format)
    content = writer.render(
        _config_json(config, params),
        {"cases": [r.model_dump() for r in report.results], "passed": report.passed},
        verify_text(report),
    )
    path = writer.save(content, _default_out(config, settings, params))
    return CommandResult(
        success=report.passed,
        data={"output": content, "path": path},
        error=None if report.passed else f"{len(report.failed)} case(s) failed",
        error_code=None if report.passed else "VERIFICATION_FAILED",
        exit_code=report.exit_code,
    )


def cmd_check(config: RunConfig, settings: Settings) -> CommandResult:
    """Recompute the residual of a dumped ActionData and compare with the stored status"""
    if not config.input_path:
        raise CommandError("check needs --input", error_code="BAD_DUMP")
    params, actions, stored = load_action_dump(config.input_path)
    element = stored.get("element", "normalized")
    if element == "general":
        raise CommandError("Residuals are defined for normalized elements", error_code="BAD_DUMP")

    data = actions[0]
    ring = data.ring
    g = GroupElement.identity(ring) if element == "identity" else GroupElement.symbolic(ring)
    if residual_cost(params) > settings.term_cap and not config.allow_heavy:
        raise CommandError("Residual above the term cap; pass --allow-heavy", "INFEASIBLE")
    violations = tracked_violations(residual(data, g, params), data.accuracy, params)
    status = "pass" if not violations else "fail"
    previous = (stored.get("residual") or {}).get("status")

    writer = ReportWriter(config.output_format)
    text = violations_text(violations)
    if previous is not None:
        text += f"\nStored status: {previous}; recomputed: {status}"
    content = writer.render(
        _config_json(config, params),
        {
            "status": status,
            "stored_status": previous,
            "violations": [v.model_dump() for v in violations],
        },
        text,
    )
    path = writer.save(content, config.output_path)
    consistent = previous is None or previous == status
    ok = status == "pass" and consistent
    return CommandResult(
        success=ok,
        data={"output": content, "path": path},
        error=None if ok else f"residual {status}, stored {previous}",
        error_code=None if ok else "CHECK_FAILED",
        exit_code=EXIT_OK if ok else EXIT_FAILED,
    )


COMMANDS = {
    "deformation": cmd_deformation,
    "action": cmd_action,
    "verify": cmd_verify,
    "check": cmd_check,
}


def run(argv: Optional[Sequence[str]] = None, settings: Optional[Settings] = None) -> CommandResult:
    """
    Parse arguments and dispatch, converting every error into a CommandResult

    Returns:
        CommandResult whose exit_code is 0 on success, 1 on a failed
        verification and 2 on a usage or configuration error
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        code = e.code if isinstance(e.code, int) else EXIT_USAGE
        return CommandResult(
            success=code == 0,
            error=None if code == 0 else "Invalid arguments",
            error_code=None if code == 0 else "USAGE",
            exit_code=EXIT_USAGE if code else EXIT_OK,
        )

    try:
        settings = settings or load_settings()
        _configure_logging(args.verbose, settings)
        if args.command == "check":
            config = RunConfig(
                command="check",
                input_path=args.input,
                output_format=args.format,
                output_path=args.out,
                allow_heavy=args.allow_heavy or settings.allow_heavy,
            )
        else:
            config = config_from_args(args, settings)
        return COMMANDS[config.command](config, settings)
    except ValidationError as e:
        logger.error(f"Invalid configuration: {e}")
        return CommandResult(
            success=False, error=str(e), error_code="VALIDATION_ERROR", exit_code=EXIT_USAGE
        )
    except (CommandError, VerificationError, ReportError) as e:
        logger.error(f"{e.error_code}: {e.message}")
        return CommandResult(
            success=False, error=e.message, error_code=e.error_code, exit_code=EXIT_USAGE
        )
    except DomainError as e:
        logger.error(f"{e.error_code}: {e.message}")
        exit_code = EXIT_FAILED if e.error_code in FAILURE_CODES else EXIT_USAGE
        return CommandResult(
            success=False, error=e.message, error_code=e.error_code, exit_code=exit_code
        )


def _configure_logging(verbose: int, settings: Settings) -> None:
    if verbose >= 2:
        level = logging.DEBUG
    elif verbose == 1:
        level = logging.INFO
    else:
        level = getattr(logging, settings.log_level)
    logging.basicConfig(level=level, format="%(asctime)s - %(name)s - %(levelname)s - %(message)s")


def main(argv: Optional[Sequence[str]] = None) -> int:
    result = run(argv)
    if result.data:
        if result.data.get("path"):
            print(f"Written to {result.data['path']}")
        else:
            print(result.data.get("output", ""))
    if result.error:
        print(f"Error [{result.error_code}]: {result.error}", file=sys.stderr)
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
