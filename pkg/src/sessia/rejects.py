"""Runner for the corpus of intentionally ill-typed programs.

Each case is a directory holding a `main.py` that builds (never runs) a
session program that must be rejected, plus an `expected.txt` with a
substring the diagnostic must contain. A case passes when the interpreter
exits nonzero on the file and its stderr contains the substring; a case
that builds cleanly fails the whole suite by name.
"""

from __future__ import annotations

import subprocess
import sys
from dataclasses import dataclass
from pathlib import Path


@dataclass(frozen=True)
class RejectCase:
    name: str
    source: Path
    expected: str


@dataclass(frozen=True)
class RejectResult:
    case: RejectCase
    rejected: bool
    matched: bool
    stderr: str

    @property
    def ok(self) -> bool:
        return self.rejected and self.matched


@dataclass
class RejectReport:
    results: list[RejectResult]

    @property
    def ok(self) -> bool:
        return bool(self.results) and all(r.ok for r in self.results)

    def failures(self) -> list[RejectResult]:
        return [r for r in self.results if not r.ok]

    def lines(self) -> list[str]:
        out = []
        for r in self.results:
            if r.ok:
                out.append(f"PASS {r.case.name}")
            elif not r.rejected:
                out.append(f"FAIL {r.case.name}: built successfully, expected rejection")
            else:
                out.append(
                    f"FAIL {r.case.name}: rejected, but diagnostic lacks "
                    f"{r.case.expected!r}"
                )
        return out


def load_cases(corpus_dir) -> list[RejectCase]:
    corpus = Path(corpus_dir)
    cases = []
    for entry in sorted(corpus.iterdir()):
        source = entry / "main.py"
        expected = entry / "expected.txt"
        if source.is_file() and expected.is_file():
            cases.append(
                RejectCase(entry.name, source, expected.read_text().strip())
            )
    return cases


def run_case(case: RejectCase, timeout: float = 30.0) -> RejectResult:
    proc = subprocess.run(
        [sys.executable, str(case.source)],
        capture_output=True,
        text=True,
        timeout=timeout,
    )
    rejected = proc.returncode != 0
    matched = case.expected in proc.stderr
    return RejectResult(case, rejected, matched, proc.stderr)


def reject_suite(corpus_dir) -> RejectReport:
    """Run every case in the corpus; report one line per case."""
    cases = load_cases(corpus_dir)
    if not cases:
        raise FileNotFoundError(f"no reject cases found under {corpus_dir}")
    return RejectReport([run_case(c) for c in cases])
