import json
from functools import lru_cache
from pathlib import Path

import pytest

from qucc.determinant import hartree_fock
from qucc.fci import fci_solve
from qucc.integrals import read_fcidump

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
REFERENCE = json.loads((FIXTURES / "reference.json").read_text())
LABELS = sorted(REFERENCE)


@lru_cache(maxsize=None)
def load(label):
    return read_fcidump(FIXTURES / f"{label}.fcidump")


def hf_det(ints):
    return hartree_fock(ints.n_spatial, ints.n_alpha, ints.n_beta)


@lru_cache(maxsize=None)
def fci(label, n_roots=1):
    return fci_solve(load(label), n_roots=n_roots)


@pytest.fixture(scope="session")
def reference():
    return REFERENCE


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance")
        for line in RESULTS:
            terminalreporter.write_line(line)
