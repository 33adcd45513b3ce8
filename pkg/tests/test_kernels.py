import importlib
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from abelia import _kernels_py as ref
from abelia import kernels
from abelia.rng import generator

compiled = pytest.importorskip("abelia._kernels")


@given(st.integers(0, 2**32), st.integers(1, 4), st.integers(1, 4))
def test_apply_axes_backends_agree(seed, n, k):
    rng = generator(seed, "kern")
    T = rng.standard_normal((k,) * n) + 1j * rng.standard_normal((k,) * n)
    mats = [None if rng.random() < 0.2 else rng.standard_normal((int(rng.integers(1, 5)), k))
            + 1j * rng.standard_normal((k,)) for _ in range(n)]
    a = ref.apply_axes(T, mats)
    b = compiled.apply_axes(T, mats)
    assert a.shape == b.shape
    assert np.allclose(a, b, atol=1e-12)


def test_apply_axes_matches_einsum():
    rng = generator(0, "einsum")
    T = rng.standard_normal((3, 4, 2))
    A, B, C = rng.standard_normal((2, 3)), rng.standard_normal((5, 4)), rng.standard_normal((2, 2))
    expect = np.einsum("ai,bj,ck,ijk->abc", A, B, C, T)
    assert np.allclose(kernels.apply_axes(T, [A, B, C]), expect, atol=1e-12)


def test_apply_axes_scalar():
    assert kernels.apply_axes(np.array(2.0 + 1j), []) == 2.0 + 1j


@given(st.integers(0, 2**32))
def test_count_mismatches_backends_agree(seed):
    rng = generator(seed, "mm")
    a, b = rng.integers(3, size=50), rng.integers(3, size=40)
    ia, ib = rng.integers(50, size=30), rng.integers(40, size=30)
    expect = int(np.count_nonzero(a[ia] != b[ib]))
    assert ref.count_mismatches(a, b, ia, ib) == expect
    assert kernels.count_mismatches(a, b, ia, ib) == expect


def test_pure_python_switch():
    code = "import abelia.kernels as k; print(k.BACKEND)"
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True,
                         env={"ABELIA_PURE_PYTHON": "1", "PATH": ""}, check=True).stdout.strip()
    assert out == "python"
    if os.environ.get("ABELIA_PURE_PYTHON", "") not in ("1", "true", "yes"):
        assert importlib.import_module("abelia.kernels").BACKEND == "cython"
