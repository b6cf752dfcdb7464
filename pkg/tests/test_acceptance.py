"""Every acceptance criterion at its stated tolerance.

One ``[PASS]``/``[FAIL]`` line per criterion is printed in the terminal
summary. Seeds match those used by ``szegolab suite``.
"""

import json
import subprocess
import sys

import pytest

from conftest import ACCEPTANCE_LINES
from szegolab import acceptance

SEEDS = dict(zip(acceptance.CRITERIA, acceptance._seeds(0, len(acceptance.CRITERIA))))


@pytest.mark.slow
@pytest.mark.parametrize("criterion", acceptance.CRITERIA, ids=lambda fn: fn.__name__.removeprefix("criterion_"))
def test_criterion(criterion):
    verdict = criterion(SEEDS[criterion])
    ACCEPTANCE_LINES.append(verdict.line())
    print(verdict.line())
    assert verdict.passed, verdict.line()


@pytest.mark.slow
def test_criterion_determinism(tmp_path):
    outs = [tmp_path / "first.json", tmp_path / "second.json"]
    codes = []
    for out in outs:
        proc = subprocess.run([sys.executable, "-m", "szegolab.cli", "suite", "--out", str(out)],
                              capture_output=True, text=True, timeout=600)
        codes.append(proc.returncode)
    same = outs[0].read_bytes() == outs[1].read_bytes()
    statuses = [v["status"] for v in json.loads(outs[0].read_text())["verdicts"]]
    ok = same and codes == [0, 0] and statuses == ["PASS"] * 10
    line = acceptance.Verdict(10, "deterministic reports", ok, int(same), 1).line()
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, (codes, statuses)
