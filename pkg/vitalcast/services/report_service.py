"""
Report Service
Renders a MetricsReport as CSV, Markdown, JSON or PDF (ReportLab)

Every renderer is a pure function of the report: no timestamps, `\\n` line
endings, trailing newline. The PDF is written in ReportLab's invariant mode so
identical reports give identical bytes.
"""

import json
import logging
from io import BytesIO
from pathlib import Path
from typing import Dict, List, Optional

from reportlab.lib import colors
from reportlab.lib.pagesizes import landscape, letter
from reportlab.lib.units import inch
from reportlab.pdfgen import canvas
from reportlab.platypus import Table, TableStyle

from vitalcast.core.config import settings
from vitalcast.core.errors import ContractViolation
from vitalcast.models.experiment_model import OutputConfig
from vitalcast.models.report_model import MetricsReport

logger = logging.getLogger(__name__)

CSV_HEADER = "method,horizon,mse,mape,n_runs"
EXTENSIONS = {"csv": "csv", "markdown": "md", "json": "json", "pdf": "pdf"}
BLANK = "--"
PDF_HORIZONS_PER_TABLE = 6

_DISPLAY = {
    "krr": "KRR",
    "gpr": "GPR",
    "arima": "ARIMA",
    "mlp": "MLP",
    "lstm-direct": "LSTM (direct)",
    "lstm-iterative": "LSTM (iterative)",
}


def display_name(method: str, substitutes: Optional[Dict[str, str]] = None) -> str:
    if method in _DISPLAY:
        label = _DISPLAY[method]
    else:
        label = method.upper()  # glstm-g1-mi -> GLSTM-G1-MI
    if substitutes and method in substitutes:
        label = f"{label} ({substitutes[method]})"
    return label


class ReportService:
    """Renders metrics tables in every supported format"""

    def __init__(self, decimals: Optional[int] = None):
        self.decimals = settings.REPORT_DECIMALS if decimals is None else decimals

    def render(self, report: MetricsReport, fmt: str) -> bytes:
        renderers = {
            "csv": self.render_csv,
            "markdown": self.render_markdown,
            "json": self.render_json,
            "pdf": self.render_pdf,
        }
        if fmt not in renderers:
            raise ContractViolation(f"unknown report format {fmt!r}; expected one of {', '.join(renderers)}")
        return renderers[fmt](report)

    # === CSV ===
    def render_csv(self, report: MetricsReport) -> bytes:
        lines = [CSV_HEADER]
        for method in report.methods:
            for horizon in report.horizons:
                cell = report.cell(method, horizon)
                mse = "" if cell.mse is None else f"{cell.mse:.6f}"
                mape = "" if cell.mape is None else f"{cell.mape:.6f}"
                lines.append(f"{method},{horizon},{mse},{mape},{report.n_runs}")
        return ("\n".join(lines) + "\n").encode("utf-8")

    # === Markdown ===
    def _number(self, value: Optional[float]) -> str:
        return BLANK if value is None else f"{value:.{self.decimals}f}"

    def render_markdown(self, report: MetricsReport) -> bytes:
        header = ["Method"] + [f"t+{h} {metric}" for h in report.horizons for metric in ("MSE", "MAPE")]
        lines = [
            "| " + " | ".join(header) + " |",
            "|" + "|".join(["---"] + ["---:"] * (len(header) - 1)) + "|",
        ]
        best = report.best_cells()
        for method in report.methods:
            row = [display_name(method, report.substitutes)]
            for horizon in report.horizons:
                cell = report.cell(method, horizon)
                for metric in ("mse", "mape"):
                    text = self._number(getattr(cell, metric))
                    if best.get((horizon, metric)) == method:
                        text = f"**{text}**"
                    row.append(text)
            lines.append("| " + " | ".join(row) + " |")
        return ("\n".join(lines) + "\n").encode("utf-8")

    # === JSON ===
    def render_json(self, report: MetricsReport) -> bytes:
        payload = report.model_dump(mode="json")
        return (json.dumps(payload, sort_keys=True, indent=2) + "\n").encode("utf-8")

    # === PDF ===
    def render_pdf(self, report: MetricsReport) -> bytes:
        buffer = BytesIO()
        page = landscape(letter)
        width, height = page
        c = canvas.Canvas(buffer, pagesize=page, invariant=1)
        c.setTitle(f"vitalcast {report.target_vital} report")

        def header():
            c.setFillColor(colors.HexColor("#667eea"))
            c.rect(0, height - 0.9 * inch, width, 0.9 * inch, fill=1, stroke=0)
            c.setFillColor(colors.white)
            c.setFont("Helvetica-Bold", 18)
            c.drawString(0.6 * inch, height - 0.6 * inch, f"Long-range prediction of {report.target_vital}")
            c.setFillColor(colors.HexColor("#374151"))
            c.setFont("Helvetica", 9)
            seeds = ", ".join(str(s) for s in report.seeds) or "none"
            c.drawString(0.6 * inch, height - 1.15 * inch, f"Mean over {report.n_runs} runs (seeds {seeds}). "
                                                            f"MSE and MAPE (%) in original units; {BLANK} = generated step.")
            return height - 1.4 * inch

        y = header()
        best = report.best_cells()
        chunks = [report.horizons[i : i + PDF_HORIZONS_PER_TABLE] for i in range(0, len(report.horizons), PDF_HORIZONS_PER_TABLE)]
        for horizons in chunks or [[]]:
            data = [["Method"] + [f"t+{h} {m}" for h in horizons for m in ("MSE", "MAPE")]]
            bold = []
            for r, method in enumerate(report.methods, start=1):
                row = [display_name(method, report.substitutes)]
                for h in horizons:
                    cell = report.cell(method, h)
                    for metric in ("mse", "mape"):
                        if best.get((h, metric)) == method:
                            bold.append((len(row), r))
                        row.append(self._number(getattr(cell, metric)))
                data.append(row)
            table = Table(data)
            style = [
                ("FONT", (0, 0), (-1, -1), "Helvetica", 8),
                ("FONT", (0, 0), (-1, 0), "Helvetica-Bold", 8),
                ("BACKGROUND", (0, 0), (-1, 0), colors.HexColor("#e0e7ff")),
                ("GRID", (0, 0), (-1, -1), 0.25, colors.grey),
                ("ALIGN", (1, 0), (-1, -1), "RIGHT"),
            ]
            style += [("FONT", pos, pos, "Helvetica-Bold", 8) for pos in bold]
            table.setStyle(TableStyle(style))
            _, table_height = table.wrapOn(c, width - 1.2 * inch, y)
            if y - table_height < 0.6 * inch:
                c.showPage()
                y = header()
            table.drawOn(c, 0.6 * inch, y - table_height)
            y -= table_height + 0.3 * inch
        c.showPage()
        c.save()
        return buffer.getvalue()

    def write_reports(self, report: MetricsReport, output: OutputConfig) -> List[Path]:
        directory = Path(output.directory)
        directory.mkdir(parents=True, exist_ok=True)
        written = []
        for fmt in output.formats:
            path = directory / f"{output.basename}.{EXTENSIONS[fmt]}"
            path.write_bytes(self.render(report, fmt))
            written.append(path)
            logger.info(f"[REPORT] ✓ Wrote {fmt} report to {path}")
        return written


# Global report service instance
report_service = ReportService()


def emit_report(report: MetricsReport, fmt: str) -> bytes:
    return report_service.render(report, fmt)


def write_reports(report: MetricsReport, output: OutputConfig) -> List[Path]:
    return report_service.write_reports(report, output)

