from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from hypack.surface import icosahedron, octahedron, tetrahedron

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def golden_faces():
    return json.loads((DATA / "golden_faces.json").read_text())["faces"]


@pytest.fixture(params=["tetrahedron", "octahedron", "icosahedron"])
def surface(request):
    return {"tetrahedron": tetrahedron, "octahedron": octahedron, "icosahedron": icosahedron}[request.param]()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance") or __import__("sys").modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
