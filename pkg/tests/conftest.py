from __future__ import annotations

import pytest

from brwscenery import _kernels
from brwscenery.lattice import Scenery

# 17x5 grid used for the middle-completion and neighbour examples
GRID_17x5 = [
    "21943741252278069",
    "75076118258674042",
    "74391217847617774",
    "86440435367519991",
    "22780394372194570",
]

# 5x5 grid whose short words feed the assembly example
GRID_5x5 = ["19437", "50761", "43912", "61404", "27803"]

# 5x5 target of the placement example, centred at the origin
GRID_TILE = ["03333", "01111", "60123", "02222", "04444"]


@pytest.fixture
def grid17() -> Scenery:
    return Scenery.from_rows(GRID_17x5)


@pytest.fixture
def grid5() -> Scenery:
    return Scenery.from_rows(GRID_5x5)


@pytest.fixture
def grid_tile() -> Scenery:
    return Scenery.from_rows(GRID_TILE, origin=(-2, -2))


@pytest.fixture(params=["numba", "numpy"])
def kernel_backend(request):
    if request.param == "numba" and not _kernels.HAVE_NUMBA:
        pytest.skip("numba not installed")
    prev = "numba" if _kernels.use_numba() else "numpy"
    _kernels.set_backend(request.param)
    yield request.param
    _kernels.set_backend(prev)
