"""Shared fixtures: sample tile sets, their certificates and small witness models."""
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from kripke import build_M0, build_M0_prime, build_M0_star  # noqa: E402
from tiling import find_periodic, parse_tileset  # noqa: E402

TILESETS_DIR = Path(__file__).resolve().parent.parent / "tilesets"

MONO = "tiles 1\n0: 0 0 0 0\n"
STRIPES = "tiles 2\n0: 2 1 0 0\n1: 1 2 0 0\n"
CHECKER = "tiles 2\n0: 1 2 3 4\n1: 2 1 4 3\n"
ROWS3 = "tiles 3\n0: 0 0 1 0\n1: 0 0 2 1\n2: 0 0 0 2\n"
NONREC = "tiles 1\n0: 0 1 0 0\n"


@pytest.fixture
def mono():
    return parse_tileset(MONO)


@pytest.fixture
def stripes():
    return parse_tileset(STRIPES)


@pytest.fixture
def checker():
    return parse_tileset(CHECKER)


@pytest.fixture
def rows3():
    return parse_tileset(ROWS3)


@pytest.fixture
def nonrec():
    return parse_tileset(NONREC)


@pytest.fixture(params=["mono", "stripes", "checker", "rows3"])
def sample(request):
    """(tile set, recurrent periodic certificate) for every tileable sample."""
    tileset = parse_tileset({"mono": MONO, "stripes": STRIPES, "checker": CHECKER, "rows3": ROWS3}[request.param])
    return tileset, find_periodic(tileset)


@pytest.fixture
def checker_m0(checker):
    return build_M0(checker, find_periodic(checker), 30, 6)


@pytest.fixture
def checker_m0_prime(checker):
    return build_M0_prime(checker, find_periodic(checker), 60, 6)


@pytest.fixture
def mono_star(mono):
    return build_M0_star(mono, find_periodic(mono), 5, 5)
