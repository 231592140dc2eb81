"""Cross-component contract: the render worker's output must satisfy the
bridge's schema and geometry expectations.

Runs only when the worker is built (frontend/dist); the rest of the suite
never needs it.
"""

import shutil
import subprocess
from pathlib import Path

import pytest

from formulakit.metrics import cdm
from formulakit.render import normalize_layout, read_layouts, reconcile_layouts

ROOT = Path(__file__).parent.parent
WORKER_CLI = ROOT / "frontend" / "dist" / "cli.js"
CONTRACT_MANIFEST = ROOT / "frontend" / "fixtures" / "manifest_contract.jsonl"

pytestmark = pytest.mark.skipif(
    not WORKER_CLI.exists() or shutil.which("node") is None,
    reason="render worker not built",
)


@pytest.fixture(scope="module")
def worker_output(tmp_path_factory):
    out = tmp_path_factory.mktemp("worker") / "layouts.jsonl"
    subprocess.run(
        ["node", str(WORKER_CLI), "--input", str(CONTRACT_MANIFEST), "--output", str(out)],
        check=True,
        capture_output=True,
    )
    return out


def test_output_validates_and_reconciles(worker_output):
    layouts = read_layouts(worker_output)  # raises SchemaError on violation
    missing, duplicated, extra = reconcile_layouts(
        ["fx:x", "fx:frac", "fx:bad"], layouts
    )
    assert (missing, duplicated, extra) == ([], [], [])


def test_contract_expectations(worker_output):
    layouts = {l.record_id: l for l in read_layouts(worker_output)}
    x = layouts["fx:x"]
    assert x.render_ok and len(x.glyphs) == 1 and x.glyphs[0].ch == "x"
    frac = layouts["fx:frac"]
    by_ch = {g.ch: g for g in frac.glyphs}
    assert by_ch["a"].y < by_ch["b"].y
    assert "—" in by_ch
    bad = layouts["fx:bad"]
    assert not bad.render_ok and bad.error_message

    score = cdm(normalize_layout(frac), normalize_layout(frac), 0.25)
    assert score.f1 == 1.0


def test_worker_matches_frozen_fixture(worker_output):
    frozen = (ROOT / "tests" / "fixtures" / "layouts_fixture.jsonl").read_text()
    assert worker_output.read_text() == frozen
