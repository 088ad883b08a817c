from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clique_memory.model import (
    ERASURE_RESAMPLE,
    EXACT_ERRORS,
    BallSpec,
    InvalidMessageError,
    ModelParams,
    NotOneHotError,
    corrupt,
    decode,
    encode,
    hamming,
    ln_blocks,
    read_messages,
    sample_messages,
    substream,
    write_messages,
)


def test_params_derived_fields():
    p = ModelParams(l=256, c=6, M=3277, kappa=Fraction(5, 6))
    assert p.N == 1536
    assert p.alpha == 3277 / 256**2
    assert p.threshold == 5
    assert p.fire_level == 5


def test_params_kappa_from_float_is_exact():
    p = ModelParams(l=10, c=10, M=1, kappa=0.9)
    assert p.kappa == Fraction(9, 10)
    assert p.threshold == 9


@pytest.mark.parametrize("kw", [dict(l=1, c=2, M=1), dict(l=2, c=1, M=1), dict(l=2, c=2, M=0),
                                dict(l=2, c=2, M=1, kappa=0), dict(l=2, c=2, M=1, kappa=1.5)])
def test_params_rejects_invalid(kw):
    with pytest.raises(ValueError):
        ModelParams(**kw)


def test_fire_level_rounds_up_fractional_threshold():
    p = ModelParams(l=4, c=3, M=1, kappa="1/2")
    assert p.threshold == Fraction(3, 2)
    assert p.fire_level == 2


def test_ln_blocks():
    assert [ln_blocks(l) for l in (64, 128, 256, 100)] == [5, 5, 6, 5]


def test_encode_examples():
    p = ModelParams(l=2, c=2, M=1)
    assert encode((0, 1), p).tolist() == [1, 0, 0, 1]
    p = ModelParams(l=4, c=3, M=1)
    v = encode((0, 0, 0), p)
    assert np.flatnonzero(v).tolist() == [0, 4, 8]


def test_encode_rejects_out_of_range():
    p = ModelParams(l=3, c=2, M=1)
    with pytest.raises(InvalidMessageError):
        encode((0, 3), p)
    with pytest.raises(InvalidMessageError):
        encode((0, 1, 2), p)


def test_decode_examples():
    p = ModelParams(l=2, c=2, M=1)
    assert decode(np.array([1, 0, 0, 1]), p) == (0, 1)
    with pytest.raises(NotOneHotError) as exc:
        decode(np.array([1, 1, 0, 0]), p)
    assert exc.value.block == 0
    with pytest.raises(NotOneHotError) as exc:
        decode(np.zeros(4), p)
    assert exc.value.block == 0 and exc.value.active == 0


def test_roundtrip_1000_random_messages(rng):
    p = ModelParams(l=7, c=5, M=1000)
    for m in sample_messages(p, rng):
        v = encode(m, p)
        assert v.sum() == p.c
        assert v.reshape(p.c, p.l).sum(axis=1).tolist() == [1] * p.c
        assert decode(v, p) == tuple(m)


def test_sampling_is_deterministic():
    p = ModelParams(l=5, c=3, M=20)
    a = sample_messages(p, substream(9, 0))
    b = sample_messages(p, substream(9, 0))
    c = sample_messages(p, substream(9, 1))
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_small_sample_in_range():
    p = ModelParams(l=2, c=2, M=4)
    msgs = sample_messages(p, substream(3))
    assert msgs.shape == (4, 2)
    assert set(np.unique(msgs)) <= {0, 1}


def test_letter_frequency_within_three_sigma():
    # binomial CI oracle: count ~ Bin(n, 1/l)
    p = ModelParams(l=8, c=3, M=100_000)
    msgs = sample_messages(p, substream(11))
    n = p.M
    sigma = np.sqrt(n * (1 / p.l) * (1 - 1 / p.l))
    for a in range(p.c):
        counts = np.bincount(msgs[:, a], minlength=p.l)
        assert np.all(np.abs(counts - n / p.l) < 3 * sigma + 1)


def test_distinct_sampling():
    p = ModelParams(l=2, c=3, M=8)
    msgs = sample_messages(p, substream(1), distinct=True)
    assert len({tuple(r) for r in msgs}) == 8
    with pytest.raises(ValueError):
        sample_messages(ModelParams(l=2, c=2, M=5), substream(1), distinct=True)


def test_hamming_examples():
    assert hamming((1, 2, 3), (1, 2, 3)) == 0
    assert hamming((0, 0, 0), (1, 1, 1)) == 3
    assert hamming((0, 0, 1, 1), (0, 1, 1, 0)) == 2
    with pytest.raises(ValueError):
        hamming((0, 0), (0, 0, 0))


msg3 = st.lists(st.integers(0, 4), min_size=6, max_size=6)


@given(msg3, msg3, msg3)
def test_hamming_is_a_metric(x, y, z):
    assert hamming(x, y) == hamming(y, x)
    assert hamming(x, z) <= hamming(x, y) + hamming(y, z)
    assert (hamming(x, y) == 0) == (x == y)


def test_corrupt_radius_zero_is_identity(rng):
    p = ModelParams(l=5, c=4, M=1)
    for mode in (EXACT_ERRORS, ERASURE_RESAMPLE):
        assert corrupt(BallSpec((1, 2, 3, 4), 0, mode), p, rng) == (1, 2, 3, 4)


def test_corrupt_radius_above_c_rejected():
    with pytest.raises(ValueError):
        BallSpec((0, 0), 3)


@settings(max_examples=200)
@given(st.lists(st.integers(0, 5), min_size=2, max_size=8), st.data())
def test_exact_errors_hits_radius_exactly(center, data):
    p = ModelParams(l=6, c=len(center), M=1)
    r = data.draw(st.integers(0, len(center)))
    seed = data.draw(st.integers(0, 2**32 - 1))
    out = corrupt(BallSpec(tuple(center), r, EXACT_ERRORS), p, substream(seed))
    assert hamming(out, center) == r
    out = corrupt(BallSpec(tuple(center), r, ERASURE_RESAMPLE), p, substream(seed))
    assert hamming(out, center) <= r


def test_erasure_resample_mean_distance():
    # each resampled block differs with probability (l-1)/l = 3/4
    p = ModelParams(l=4, c=6, M=1)
    rng = substream(5)
    ball = BallSpec((0, 1, 2, 3, 0, 1), 2, ERASURE_RESAMPLE)
    d = [hamming(corrupt(ball, p, rng), ball.center) for _ in range(10_000)]
    assert abs(np.mean(d) - 1.5) <= 0.05


def test_message_file_roundtrip(tmp_path):
    p = ModelParams(l=5, c=3, M=4)
    msgs = sample_messages(p, substream(2))
    path = tmp_path / "msgs.txt"
    write_messages(path, msgs, p)
    text = path.read_text()
    assert text.splitlines()[0] == "5 3 4"
    assert text.endswith("\n") and "\r" not in text
    l, c, back = read_messages(path)
    assert (l, c) == (5, 3)
    assert np.array_equal(back, msgs)


def test_message_file_errors(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("3 2 2\n0 1\n")
    with pytest.raises(ValueError, match="announces 2"):
        read_messages(path)
    path.write_text("3 2 1\n0 3\n")
    with pytest.raises(InvalidMessageError):
        read_messages(path)
