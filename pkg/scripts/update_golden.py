"""Regenerate tests/golden/<case>.json from tests/golden/cases.json.

Review the diff before committing: golden files are expected outputs, not
whatever the current build happens to print.
"""
import contextlib
import io
import json
import sys
from pathlib import Path

from oligoscope.cli import main

GOLDEN = Path(__file__).resolve().parent.parent / "tests" / "golden"


def run(argv):
    out = io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(io.StringIO()):
        code = main(argv)
    return code, out.getvalue()


def regenerate(names=None):
    cases = json.loads((GOLDEN / "cases.json").read_text())
    for name, argv in cases.items():
        if names and name not in names:
            continue
        code, text = run(argv)
        doc = {"argv": argv, "exit": code, "stdout": json.loads(text) if text.strip() else None}
        (GOLDEN / f"{name}.json").write_text(json.dumps(doc, indent=2) + "\n")
        print(f"{name}: exit {code}")


if __name__ == "__main__":
    regenerate(sys.argv[1:])
