import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from swiptpep.channel import Topology, path_loss_gains, sample_fading, sample_fading_block


def test_midpoint_path_loss():
    L_sr1, L_sr2, L_rd1, L_rd2 = path_loss_gains(Topology(0.5, 0.5, 2.7))
    assert L_sr1 == pytest.approx(0.153893, rel=1e-5, abs=0)
    assert L_sr1 == L_sr2 == L_rd1 == L_rd2


def test_endpoint_limits():
    L_sr, _, L_rd, _ = path_loss_gains(Topology(1 - 1e-9, 0.5))
    assert L_sr == pytest.approx(1.0, rel=1e-6, abs=0)
    assert L_rd < 1e-20


@pytest.mark.parametrize("d", [0.0, 1.0, -0.2, 1.5])
def test_rejects_positions_off_segment(d):
    with pytest.raises(ValueError):
        Topology(d, 0.5)


def test_rejects_small_exponent():
    with pytest.raises(ValueError):
        Topology(0.5, 0.5, 2.0)


@given(st.floats(0.01, 0.98), st.floats(0.001, 0.01))
def test_path_loss_monotone_in_distance(d, step):
    near = path_loss_gains(Topology(d, 0.5))
    far = path_loss_gains(Topology(d + step, 0.5))
    assert far[0] > near[0]
    assert far[2] < near[2]


def test_link_statistics(rng):
    f = sample_fading_block(rng, 10 ** 6)
    assert np.mean(np.abs(f.h_sd) ** 2) == pytest.approx(1.0, rel=0.01, abs=0)
    ks = stats.kstest(np.abs(f.h_sr1) ** 2, "expon")
    assert ks.statistic < 1.63 / math.sqrt(f.h_sr1.size)
    corr = np.corrcoef(np.abs(f.h_sd) ** 2, np.abs(f.h_rd1) ** 2)[0, 1]
    assert abs(corr) < 3 / math.sqrt(f.h_sd.size)


def test_single_draw_is_scalar(rng):
    f = sample_fading(rng)
    assert np.ndim(f.h_sd) == 0
    assert len(f.h_sr) == len(f.h_rd) == 2
