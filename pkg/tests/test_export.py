"""Tests for CSV, JSON, Excel and PDF export."""

import json

import pandas as pd
import pytest
from openpyxl import load_workbook

from src.export.csv_export import export_frame, export_to_excel, git_revision, write_metadata
from src.export.pdf_report import generate_pdf_report
from src.experiments.verify import SuiteVerdict


@pytest.fixture
def summary_frame():
    return pd.DataFrame({
        'algorithm': ['zooming', 'ucb1_constant'],
        'delta': [0.08, 0.08],
        'mean_utility': [0.153, 0.121],
        'se': [0.002, 0.003],
    })


@pytest.fixture
def sample_metadata():
    return {
        'command': 'sweep-delta',
        'git_revision': 'unknown',
        'config_digest': 'abc',
        'seeds': {'base_seed': 11, 'streams': {'market': 0, 'algorithm': 1}},
        'deltas': [0.08],
    }


def test_export_frame(tmp_path, summary_frame):
    path = export_frame(summary_frame, tmp_path / "nested" / "summary.csv")
    assert path.exists()
    loaded = pd.read_csv(path)
    assert loaded['algorithm'].tolist() == ['zooming', 'ucb1_constant']
    assert 'Unnamed: 0' not in loaded.columns


def test_write_metadata(tmp_path, sample_metadata):
    path = write_metadata(sample_metadata, tmp_path / "metadata.json")
    assert json.loads(path.read_text())['seeds']['base_seed'] == 11


def test_export_to_excel(tmp_path, summary_frame, sample_metadata):
    path = export_to_excel({'summary': summary_frame}, tmp_path / "report.xlsx", sample_metadata)
    workbook = load_workbook(path)
    assert workbook.sheetnames == ['summary', 'Metadata']
    keys = [row[0].value for row in workbook['Metadata'].iter_rows(min_row=2)]
    assert 'seeds.streams.market' in keys


def test_excel_sheet_names_truncated(tmp_path, summary_frame):
    name = 'logs_ucb1_constant_0.08_with_a_long_suffix'
    path = export_to_excel({name: summary_frame}, tmp_path / "logs.xlsx")
    assert load_workbook(path).sheetnames == [name[:31]]


def test_git_revision_outside_repository(tmp_path):
    assert git_revision(tmp_path) == 'unknown'


def test_generate_pdf_report(tmp_path, summary_frame, sample_metadata):
    verdicts = [SuiteVerdict('nonmonotone', True, seconds=0.1),
                SuiteVerdict('golden', False, seconds=1.2)]
    path = tmp_path / "report.pdf"
    generate_pdf_report(path, 'Verification', verdicts=verdicts,
                        tables={'summary': summary_frame}, metadata=sample_metadata)
    assert path.exists()
    assert path.stat().st_size > 0


def test_pdf_long_table(tmp_path):
    frame = pd.DataFrame({'t': range(100), 'mean_utility': [0.1] * 100})
    path = generate_pdf_report(tmp_path / "long.pdf", 'Over time', tables={'series': frame})
    assert path.exists()
