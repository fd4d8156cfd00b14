"""
PDF Report Generator for the contract lab.

Renders verify verdicts and experiment summary tables.
"""

from datetime import datetime
from typing import Any, Dict, Optional, Sequence

import pandas as pd
from fpdf import FPDF

from src.utils.logger import get_logger

logger = get_logger(__name__)

PASS_COLOR = (22, 163, 74)
FAIL_COLOR = (220, 38, 38)
BANNER_COLOR = (30, 41, 59)
MAX_TABLE_ROWS = 40


class PDFReport(FPDF):
    """Custom PDF class with header and footer."""

    def header(self):
        self.set_font('Helvetica', 'B', 15)
        self.cell(0, 10, 'Dynamic Contract Lab Report', 0, 1, 'C')
        self.ln(5)

    def footer(self):
        self.set_y(-15)
        self.set_font('Helvetica', 'I', 8)
        self.cell(0, 10, f'Page {self.page_no()}/{{nb}} - Generated by Dynamic Contract Lab',
                  0, 0, 'C')

    def banner(self, text: str):
        self.set_fill_color(*BANNER_COLOR)
        self.set_text_color(255, 255, 255)
        self.set_font('Helvetica', 'B', 11)
        self.cell(0, 8, f"  {text.upper()}", 0, 1, 'L', fill=True)
        self.set_text_color(0, 0, 0)
        self.ln(2)

    def table(self, frame: pd.DataFrame):
        """Plain text table; long frames are cut to the first rows."""
        if frame.empty:
            self.set_font('Helvetica', 'I', 9)
            self.cell(0, 6, "(no rows)", 0, 1)
            return
        width = (self.w - self.l_margin - self.r_margin) / len(frame.columns)
        self.set_font('Helvetica', 'B', 8)
        for column in frame.columns:
            self.cell(width, 6, str(column)[:18], 1, 0, 'C')
        self.ln()
        self.set_font('Helvetica', '', 8)
        for _, row in frame.head(MAX_TABLE_ROWS).iterrows():
            for value in row:
                text = f"{value:.4f}" if isinstance(value, float) else str(value)
                self.cell(width, 6, text[:18], 1, 0, 'C')
            self.ln()
        if len(frame) > MAX_TABLE_ROWS:
            self.set_font('Helvetica', 'I', 8)
            self.cell(0, 6, f"... {len(frame) - MAX_TABLE_ROWS} more rows in the CSV", 0, 1)
        self.ln(3)


def generate_pdf_report(filepath, title: str,
                        verdicts: Optional[Sequence[Any]] = None,
                        tables: Optional[Dict[str, pd.DataFrame]] = None,
                        metadata: Optional[Dict[str, Any]] = None):
    """
    Generate a PDF with verify verdicts and/or summary tables.

    Args:
        filepath: Path to save the PDF file
        title: heading of the report
        verdicts: SuiteVerdict-like objects with name, passed and seconds
        tables: section name -> frame
        metadata: a few top-level keys are printed under the title
    """
    logger.info(f"Generating PDF report '{title}'")
    pdf = PDFReport()
    pdf.alias_nb_pages()
    pdf.add_page()

    pdf.set_font('Helvetica', 'B', 12)
    pdf.cell(0, 10, title, 0, 1, 'L')
    pdf.set_font('Helvetica', '', 10)
    pdf.cell(0, 6, f"Date: {datetime.now().strftime('%Y-%m-%d %H:%M')}", 0, 1, 'L')
    for key in ('command', 'git_revision', 'config_digest'):
        if metadata and key in metadata:
            pdf.cell(0, 6, f"{key}: {metadata[key]}", 0, 1, 'L')
    pdf.ln(5)

    if verdicts:
        pdf.banner("Verification verdicts")
        for verdict in verdicts:
            pdf.set_font('Helvetica', 'B', 10)
            pdf.set_text_color(*(PASS_COLOR if verdict.passed else FAIL_COLOR))
            pdf.cell(60, 7, verdict.name, 0, 0)
            pdf.cell(30, 7, 'PASS' if verdict.passed else 'FAIL', 0, 0)
            pdf.set_text_color(0, 0, 0)
            pdf.set_font('Helvetica', '', 9)
            pdf.cell(0, 7, f"{verdict.seconds:.1f}s", 0, 1)
        pdf.ln(5)

    for name, frame in (tables or {}).items():
        pdf.banner(name.replace('_', ' '))
        pdf.table(frame)

    pdf.output(str(filepath))
    logger.info(f"PDF report saved to {filepath}")
    return filepath
