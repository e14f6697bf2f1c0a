"""Shared fixtures: the reference area and a seeded generator factory."""

import math

import numpy as np
import pytest


@pytest.fixture(autouse=True)
def _run_in_tmp(tmp_path, monkeypatch):
    """Scan runs always write their configured output file; keep every
    test's working directory disposable so defaults never touch the repo."""
    monkeypatch.chdir(tmp_path)


@pytest.fixture
def area_third():
    """The area 1/sqrt(3), for which the equilateral half-base is also 1/sqrt(3)."""
    return 1.0 / math.sqrt(3.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20260815)
