"""Export module for writing reports and support dumps in text, JSON and CSV."""

import csv
import io
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Tuple

from rich.console import Console
from rich.table import Table

from .ensemble import Support
from .utils import ensure_dir, write_to_file

logger = logging.getLogger(__name__)

DUMP_SUFFIXES = {".ndjson": "ndjson", ".jsonl": "ndjson", ".csv": "csv"}


def render_json(data: Dict[str, Any]) -> str:
    """Sorted, indented JSON with a trailing newline; identical input gives identical bytes."""
    return json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _flatten(data: Any, prefix: str = "") -> Iterable[Tuple[str, Any]]:
    if isinstance(data, dict):
        for key in sorted(data):
            yield from _flatten(data[key], f"{prefix}.{key}" if prefix else str(key))
    elif isinstance(data, list):
        yield prefix, json.dumps(data, sort_keys=True)
    else:
        yield prefix, "" if data is None else data


def render_csv(data: Dict[str, Any]) -> str:
    """Key/value rows; nested keys are dotted, lists stay JSON-encoded."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    if "certificates" in data:
        writer.writerow(["certificate", "passed", "value"])
        for cert in data["certificates"]:
            writer.writerow([cert["name"], cert["passed"], cert["value"]])
    else:
        writer.writerow(["key", "value"])
        writer.writerows(_flatten(data))
    return buffer.getvalue()


def _frequency_table(group: str, frequencies: Dict[str, float], counts: Optional[Dict[str, int]]) -> Table:
    labels = group.split(",")
    table = Table(title=f"Joint outcomes of {', '.join(labels)}", header_style="bold")
    for label in labels:
        table.add_column(label, justify="center")
    if counts is not None:
        table.add_column("Count", justify="right")
    table.add_column("Frequency", justify="right")
    for outcome, frequency in frequencies.items():
        row = outcome.split(",")
        if counts is not None:
            row.append(str(counts.get(outcome, 0)))
        row.append(f"{frequency:.5f}")
        table.add_row(*row)
    return table


def _inference_table(rows: List[List[int]]) -> Table:
    table = Table(title="Inferred objective values", header_style="bold")
    for label in ("T", "Y", "E", "G"):
        table.add_column(label, justify="center")
    for row in rows:
        table.add_row(*(str(v) for v in row))
    return table


def render_text(data: Dict[str, Any], width: int = 100) -> str:
    """Human-readable report rendered through rich."""
    console = Console(file=io.StringIO(), width=width, force_terminal=False, color_system=None)

    if "certificates" in data:
        for cert in data["certificates"]:
            status = "PASS" if cert["passed"] else "FAIL"
            console.print(f"{status}  {cert['name']}  ({cert['value']})", highlight=False, markup=False)
        console.print(f"{sum(c['passed'] for c in data['certificates'])}/{len(data['certificates'])} certificates passed")
        return console.file.getvalue()

    console.print(
        f"[bold]{data['experiment']}[/bold]  n={data['n']}  seed={data['seed']}  extension={data['extension']}",
        highlight=False,
    )
    details = data.get("details", {})
    counts = details.get("counts", {})
    for group, frequencies in data["frequencies"].items():
        group_counts = counts.get(group, counts) if counts else None
        if group_counts and not all(isinstance(v, int) for v in group_counts.values()):
            group_counts = None
        console.print(_frequency_table(group, frequencies, group_counts))
    if "inference_table" in details:
        console.print(_inference_table(details["inference_table"]))

    summary = Table(show_header=False, box=None)
    summary.add_column("Key", style="dim")
    summary.add_column("Value")
    summary.add_row("simultaneous_set_size", str(data["simultaneous_set_size"]))
    if data.get("table_conformance") is not None:
        summary.add_row("table_conformance", str(data["table_conformance"]).lower())
    for key, value in _flatten({k: v for k, v in details.items() if k not in ("counts", "inference_table")}):
        summary.add_row(key, str(value))
    console.print(summary)
    console.print(f"verdict: {data['verdict']}", highlight=False, markup=False)
    return console.file.getvalue()


class Exporter:
    """Handles exporting reports to different formats."""

    def render(self, data: Dict[str, Any], format: str) -> str:
        """
        Render a report dict.

        Args:
            data: Report as produced by ``AnalysisReport.to_dict`` or a certificate listing
            format: One of text, json, csv

        Returns:
            Rendered report

        Raises:
            ValueError: If the format is unknown
        """
        format = format.lower()
        if format == "json":
            return render_json(data)
        if format == "csv":
            return render_csv(data)
        if format == "text":
            return render_text(data)
        raise ValueError(f"Unsupported format: {format}")

    def export(self, data: Dict[str, Any], format: str, output_path: Optional[str] = None) -> bool:
        """
        Export a report to stdout or to a file.

        Args:
            data: Report dict
            format: Target format (text, json, csv)
            output_path: Destination file path; stdout when None

        Returns:
            True if successful, False otherwise.
        """
        try:
            text = self.render(data, format)
            if output_path is None:
                print(text, end="")
                return True
            path = Path(output_path)
            ensure_dir(path.parent)
            write_to_file(path, text)
            logger.info(f"Report written to {path}")
            return True
        except Exception as e:
            logger.error(f"Export failed: {e}")
            return False


def dump_support_ndjson(support: Support) -> str:
    """One JSON object per specimen, in id order."""
    return "".join(json.dumps(s.to_dict(), sort_keys=True) + "\n" for s in support.specimens)


def dump_support_csv(support: Support) -> str:
    """One row per specimen: id, then a measured and an objective column per registered label."""
    labels = sorted(support.observables)
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["id"] + [f"{kind}:{label}" for label in labels for kind in ("measured", "objective")])
    for specimen in support.specimens:
        row: List[Any] = [specimen.id]
        for label in labels:
            objective = specimen.objective.get(label)
            row.append(specimen.measured.get(label, ""))
            row.append("" if objective is None else objective.value)
        writer.writerow(row)
    return buffer.getvalue()


def write_support_dump(support: Support, output_path: str) -> bool:
    """
    Write a support dump, choosing the format from the file suffix.

    Returns:
        True if successful, False otherwise.
    """
    path = Path(output_path)
    kind = DUMP_SUFFIXES.get(path.suffix.lower())
    if kind is None:
        logger.error(f"Unsupported dump suffix '{path.suffix}' (use .ndjson, .jsonl or .csv)")
        return False
    try:
        ensure_dir(path.parent)
        write_to_file(path, dump_support_ndjson(support) if kind == "ndjson" else dump_support_csv(support))
        logger.info(f"Support dump written to {path}")
        return True
    except Exception as e:
        logger.error(f"Dump failed: {e}")
        return False


def write_family_dump(families: Dict[str, Any], output_path: str) -> bool:
    """
    Write history family dumps as JSON.

    Returns:
        True if successful, False otherwise.
    """
    path = Path(output_path)
    if path.suffix.lower() != ".json":
        logger.error(f"Unsupported family dump suffix '{path.suffix}' (use .json)")
        return False
    try:
        ensure_dir(path.parent)
        write_to_file(path, render_json(families))
        logger.info(f"Family dump written to {path}")
        return True
    except Exception as e:
        logger.error(f"Dump failed: {e}")
        return False
