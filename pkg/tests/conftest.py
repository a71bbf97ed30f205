import numpy as np
import pytest

# First four rows of the published soybean snapshot plus two invented rows
# so that every EPV and LS level occurs.
SOYBEAN_CSV = """\
Genotypes,EPV,PH,NPB,LS,NPPP,SW,SYPP,DPI
1,Poor,54,6.8,Moderate,59.8,6.5,2.5,65
2,Poor,67,3.4,Severe,33,6.2,3.9,64
3,Poor,38.4,2.8,Slight,68,6.9,4.4,61
4,Good,60.8,4,Moderate,34.6,6.1,3,65
5,Very Good,89.6,5,Severe,32.6,7.3,3.4,62
6,Good,71.2,4.4,Slight,51.0,6.6,3.7,63
"""

SOYBEAN_SCHEMA = {"EPV": "categorical", "LS": "categorical"}
SOYBEAN_ENCODINGS = {"EPV": ["Poor", "Good", "Very Good"], "LS": ["Slight", "Moderate", "Severe"]}


@pytest.fixture
def soybean_csv():
    return SOYBEAN_CSV


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# One line per acceptance criterion, echoed in the terminal summary.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1][1:])):
            terminalreporter.write_line(line)
