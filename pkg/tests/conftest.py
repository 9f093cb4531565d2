"""
Shared fixtures.

The reference window is ``q = 0.5`` with exponents ``-12 .. 40``. The
kernel table and the calibrated transforms are built once per session.
"""

import json

import pytest

from pyqspectral.fourier import calibrate
from pyqspectral.lattice import LatticeSpec
from pyqspectral.special import build_kernel_table


@pytest.fixture(scope="session")
def spec():
    return LatticeSpec(0.5, -12, 40)


@pytest.fixture(scope="session")
def kernel(spec):
    return build_kernel_table(spec)


@pytest.fixture(scope="session")
def cfg_full(spec, kernel):
    return calibrate(spec, "full", kernel)


@pytest.fixture(scope="session")
def cfg_half(spec, kernel):
    return calibrate(spec, "half", kernel)


@pytest.fixture
def write_config(tmp_path):
    """Writes a run configuration and returns its path."""

    def _write(**data):
        data.setdefault("q", 0.5)
        data.setdefault("k_min", -12)
        data.setdefault("k_max", 40)
        data.setdefault("output_dir", str(tmp_path / "out"))
        path = tmp_path / "run.json"
        path.write_text(json.dumps(data))
        return str(path)

    return _write
