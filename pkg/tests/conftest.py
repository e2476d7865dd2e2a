import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))


def famdyn(*args, env=None, timeout=600):
    """Run the command-line tool in a fresh interpreter."""
    return subprocess.run([sys.executable, "-m", "famdyn.cli", *map(str, args)], capture_output=True,
                          text=True, env={**os.environ, **(env or {})}, timeout=timeout)


@pytest.fixture(scope="session")
def corpus_runs(tmp_path_factory):
    """Two full ``corpus --seed 0`` runs, the second with a different thread count."""
    dirs, procs = [], []
    for k, threads in enumerate(("1", "2")):
        d = tmp_path_factory.mktemp(f"corpus{k}")
        procs.append(famdyn("corpus", "--seed", 0, "--out", d, "--quiet", env={"FAMDYN_THREADS": threads}))
        dirs.append(d)
    return dirs, procs


@pytest.fixture(scope="session")
def corpus_reports(corpus_runs):
    dirs, _ = corpus_runs
    return json.loads((dirs[0] / "corpus.json").read_text())["reports"]


ACCEPTANCE: dict = {}


@pytest.fixture
def record():
    """Store the PASS/FAIL line of an acceptance criterion, then assert it."""
    def _record(number: int, title: str, ok: bool, detail: str = ""):
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}" + (f"  [{detail}]" if detail else "")
        ACCEPTANCE[number] = line
        print(line)
        assert ok, line
    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
