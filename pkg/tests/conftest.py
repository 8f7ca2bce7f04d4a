import pathlib
import sys

import pytest

sys.path.insert(0, str(pathlib.Path(__file__).parent))

from dagrepl.dag import parse_dag

FIXTURES = pathlib.Path(__file__).parent / "fixtures"


@pytest.fixture
def fig1_dag():
    return parse_dag((FIXTURES / "fig1_dag.txt").read_text())


@pytest.fixture
def fig1_vertices(fig1_dag):
    """The seven commands keyed by the conventional vertex letters."""
    by_key = {(c.issuer, c.seq): c for c in fig1_dag.commands()}
    return {
        "A": by_key[(1, 1)], "B": by_key[(2, 1)], "C": by_key[(3, 1)],
        "D": by_key[(1, 2)], "E": by_key[(2, 2)], "F": by_key[(1, 3)],
        "G": by_key[(3, 2)],
    }
