import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from opsys_index.systems import Graph  # noqa: E402

PETERSEN = Graph.petersen()

# graphs of the acceptance corpus; the Petersen pieces are induced subgraphs
CORPUS = {
    "K3": Graph.complete(3),
    "P3": Graph.path(3),
    "C4": Graph.cycle(4),
    "C5": Graph.cycle(5),
    "Pet[0..5]": PETERSEN.induced(range(6)),
    "Pet[0,1,5,6,7,8]": PETERSEN.induced([0, 1, 5, 6, 7, 8]),
    "Pet[0,2,5,7]": PETERSEN.induced([0, 2, 5, 7]),
}

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
