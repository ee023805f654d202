import math

import numpy as np
import pytest

from memsc.errors import DimensionMismatch, DivByZero, EmptyCounts
from memsc.metrics import (distortion_mse, index_entropy, mean_ci, psnr, raw_bits_per_frame,
                           reasoning_capacity, semantic_efficiency, summarize)
from memsc.protocol import SessionConfig, run_session


def test_semantic_efficiency():
    assert semantic_efficiency(0, 10, 100, 50) == 0
    assert semantic_efficiency(10, 10, 50, 50) == 1
    assert semantic_efficiency(0.978, 1, 20189, 1) == pytest.approx(19744.842, abs=1e-3)
    assert round(semantic_efficiency(0.978, 1, 20189, 1)) == 19745
    with pytest.raises(DivByZero):
        semantic_efficiency(1, 0, 1, 1)
    with pytest.raises(DivByZero):
        semantic_efficiency(1, 1, 1, 0)


def test_reasoning_capacity():
    assert reasoning_capacity(0) == 0
    assert reasoning_capacity(1.0) == 1.0
    assert reasoning_capacity(0.01) == pytest.approx(0.01 / math.log(2), rel=0.01)
    assert reasoning_capacity(19745) == pytest.approx(14.27, abs=0.01)


def test_index_entropy():
    assert index_entropy([5]) == 0
    assert index_entropy([1] * 8) == pytest.approx(3.0)
    assert index_entropy([3, 1]) == pytest.approx(0.8112781244591328, abs=1e-12)
    assert index_entropy({"a": 3, "b": 1, "c": 0}) == pytest.approx(0.8113, abs=1e-4)
    with pytest.raises(EmptyCounts):
        index_entropy([])
    with pytest.raises(EmptyCounts):
        index_entropy([0, 0])


def test_distortion_and_psnr():
    x = np.zeros((4, 4))
    assert distortion_mse(x, x) == 0 and psnr(0.0) == math.inf
    assert distortion_mse(x, np.ones((4, 4))) == 1.0 and psnr(1.0) == 0.0
    assert psnr(0.01) == pytest.approx(20.0)
    with pytest.raises(DimensionMismatch):
        distortion_mse(x, np.zeros(3))


def test_raw_bits():
    assert raw_bits_per_frame(32, 32, 3) == 24576


def test_summarize_pools_sessions():
    rng = np.random.default_rng(0)
    z = rng.standard_normal(48)
    z /= np.linalg.norm(z)
    log = run_session([z] * 10, SessionConfig(tau=0.9))
    rep = summarize([log, log], 24576)
    assert rep.T == 20 and rep.B_sem == 2 * (384 + 9)
    assert rep.hit_rate == pytest.approx(0.9)
    # index 0 in two different sessions counts as two symbols
    assert rep.index_entropy == pytest.approx(1.0)
    assert rep.to_dict()["psnr"] == "inf" or rep.psnr < math.inf


def test_mean_ci():
    m, hw = mean_ci([1.0, 2.0, 3.0])
    assert m == 2.0 and hw == pytest.approx(1.96 * 1.0 / math.sqrt(3))
    assert mean_ci([4.0]) == (4.0, 0.0)
