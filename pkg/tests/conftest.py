from functools import lru_cache
from pathlib import Path

import pytest

from hedac.geometry import geometry_from_mesh, load_mesh, structured_rectangle

ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = ROOT / "scenarios"
MESHES = SCENARIOS / "meshes"
DATA = Path(__file__).parent / "data"

# Filled by test_acceptance.py, printed at the end of the run.
CRITERIA: dict[str, tuple[bool, str]] = {}


@lru_cache(maxsize=None)
def shipped_mesh(name: str):
    return load_mesh(MESHES / f"{name}.mesh")


@lru_cache(maxsize=None)
def unit_square(n: int):
    mesh = structured_rectangle(0.0, 0.0, 1.0, 1.0, n, n)
    return geometry_from_mesh(mesh), mesh


@pytest.fixture(scope="session")
def case1():
    return shipped_mesh("case1")


@pytest.fixture(scope="session")
def square8():
    return unit_square(8)


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(CRITERIA, key=lambda k: (int(k.split(".")[0]), k)):
        ok, detail = CRITERIA[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")
