"""
Text and JSON rendering of computed objects and verification reports
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple

from lubin_tate.fgl import FGLData
from lubin_tate.models import CocycleProbe, DeformationParams, Violation, VerifyReport
from lubin_tate.series import TruncatedSeries
from lubin_tate.stabilizer import ActionData, StabilizerError

logger = logging.getLogger(__name__)


class ReportError(Exception):
    """Exception raised when a dump cannot be written or read back"""

    def __init__(self, message: str, error_code: str):
        self.message = message
        self.error_code = error_code
        super().__init__(self.message)


class ReportWriter:
    """Render results as text or as the {"config", "results"} JSON document"""

    def __init__(self, output_format: str = "text"):
        if output_format not in ("text", "json"):
            raise ReportError(f"Unknown format: {output_format}", error_code="BAD_FORMAT")
        self.output_format = output_format

    def render(self, config: Mapping[str, Any], results: Mapping[str, Any], text: str) -> str:
        """Pick the JSON document or the prepared text according to the format"""
        if self.output_format == "json":
            return json.dumps({"config": dict(config), "results": dict(results)}, indent=2)
        return text

    def save(self, content: str, output_path: Optional[str] = None) -> Optional[str]:
        """
        Write content to a file when a path is given

        Returns:
            The path written, or None when nothing was saved
        """
        if not output_path:
            return None
        output_path = self._ensure_path(output_path)
        with open(output_path, "w", encoding="utf-8") as f:
            f.write(content)
            if not content.endswith("\n"):
                f.write("\n")
        logger.info(f"Report saved to {output_path}")
        return output_path

    def _ensure_path(self, path: str) -> str:
        """Ensure output directory exists and return full path"""
        path_obj = Path(path)
        path_obj.parent.mkdir(parents=True, exist_ok=True)
        return str(path_obj)


def params_json(params: DeformationParams) -> Dict[str, Any]:
    return params.model_dump(mode="json")


def series_text(name: str, series: TruncatedSeries[Any], limit: int = 12) -> str:
    """One line per nonzero coefficient, lowest degrees first"""
    items = sorted(series.coeffs.items(), key=lambda kc: (series._deg(kc[0]), kc[0]))
    lines = [f"{name} (modulo degree {series.order}, {len(items)} terms):"]
    for key, c in items[:limit]:
        lines.append(f"  [{key}] {c}")
    if len(items) > limit:
        lines.append(f"  ... {len(items) - limit} more")
    return "\n".join(lines)


def deformation_text(fgl: FGLData, reduced_p_series: TruncatedSeries[Any]) -> str:
    params = fgl.params
    support = sorted(fgl.F.coeffs, key=lambda k: (sum(k), k))
    parts = [
        f"Universal deformation at {params.label()}",
        series_text("log", fgl.log),
        series_text("exp", fgl.exp),
        f"F support ({len(support)} monomials): "
        + ", ".join(f"x^{i}y^{j}" for i, j in support[:20])
        + (" ..." if len(support) > 20 else ""),
        series_text("[p](x) over Q", fgl.p_series),
        series_text("[p](x) mod p", reduced_p_series),
    ]
    return "\n\n".join(parts)


def action_text(
    actions: List[ActionData], diff: Optional[Tuple[int, int]] = None, compared: bool = False
) -> str:
    parts = []
    for data in actions:
        lines = [f"Engine: {data.engine}"]
        for i, (t, acc) in enumerate(zip(data.t, data.accuracy)):
            lines.append(f"  t_{i} mod u^{acc} = {t.truncate_u(acc)}")
        lines.append(f"  g_*(u) = {data.w}")
        parts.append("\n".join(lines))
    if compared:
        if diff is None:
            parts.append("Diff: none (engines agree within accuracy)")
        else:
            parts.append(f"Diff: t_{diff[0]} first differs at u^{diff[1]}")
    return "\n\n".join(parts)


def violations_text(violations: List[Violation], limit: int = 20) -> str:
    if not violations:
        return "Residual: zero on all tracked coefficients"
    lines = [f"Residual: {len(violations)} violation(s)"]
    lines += [f"  {v.describe()}" for v in violations[:limit]]
    return "\n".join(lines)


def cocycle_text(probe: CocycleProbe) -> str:
    return (
        f"Cocycle probe at (p={probe.p}, h={probe.h}) modulo u^{probe.u_order}:\n"
        f"  t_0(g) g_*(t_0(g'))  first deviation: {probe.left_first_deviation}\n"
        f"  g'_*(t_0(g)) t_0(g') first deviation: {probe.right_first_deviation}"
    )


def verify_text(report: VerifyReport) -> str:
    lines = []
    for r in report.results:
        line = f"{r.status.upper():8} {r.case_id:28} {r.wall_time_ms:>7} ms"
        if r.witness:
            line += f"  witness: {r.witness}"
        if r.detail:
            line += f"  ({r.detail})"
        if r.error_code:
            line += f"  [{r.error_code}]"
        lines.append(line)
    counts: Dict[str, int] = {}
    for r in report.results:
        counts[r.status] = counts.get(r.status, 0) + 1
    lines.append(", ".join(f"{n} {status}" for status, n in sorted(counts.items())))
    return "\n".join(lines)


def load_action_dump(path: str) -> Tuple[DeformationParams, List[ActionData], Dict[str, Any]]:
    """
    Read an action dump written with --format json

    Returns:
        The parameters, every ActionData in the dump and the stored results

    Raises:
        ReportError: If the file is missing or not an action dump
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            document = json.load(f)
    except OSError as e:
        raise ReportError(f"Cannot read {path}: {e}", error_code="IO_ERROR")
    except json.JSONDecodeError as e:
        raise ReportError(f"{path} is not JSON: {e}", error_code="BAD_DUMP")

    try:
        config = document["config"]
        results = document["results"]
        params = DeformationParams(**config["params"])
        actions = [ActionData.from_json(a) for a in results["actions"]]
    except (KeyError, TypeError) as e:
        raise ReportError(f"{path} is not an action dump: missing {e}", error_code="BAD_DUMP")
    except StabilizerError as e:
        raise ReportError(e.message, error_code="BAD_DUMP")
    if not actions:
        raise ReportError(f"{path} holds no action data", error_code="BAD_DUMP")
    logger.info(f"Loaded {len(actions)} action dump(s) from {path}")
    return params, actions, results
