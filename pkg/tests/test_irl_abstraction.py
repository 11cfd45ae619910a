import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import make_video
from expertrec.domain import Response
from expertrec.irl import Discretizer, INITIAL_STATE, abstract_slate, encode_state, realize_action


def test_sizes(disc):
    assert disc.n_states == 65
    assert disc.n_descriptors == 8
    assert disc.n_actions == 36


def test_no_prior_response_is_initial_state(disc):
    assert encode_state(None, disc) == INITIAL_STATE
    assert encode_state(Response(), disc) == INITIAL_STATE


def test_mixed_radix_example(disc):
    r = Response(clicked=0, watch_time=3.6, engagement_rate=0.9, observed_quality=0.6, topic=3)
    s = encode_state(r, disc)
    assert s == 1 + 3 * (4 * 2) + 3 * 2 + 1 == 32
    assert disc.decode(s) == (3, 3, 1)


def test_state_bijection(disc):
    for s in range(disc.n_states):
        d = disc.decode(s)
        assert (s == 0) == (d is None)
        if d is not None:
            assert disc.encode(*d) == s
    with pytest.raises(ValueError):
        disc.decode(65)


@given(st.integers(0, 7), st.floats(-1, 1), st.floats(0, 1))
def test_encode_decode_round_trip(topic, q, e):
    disc = Discretizer()
    r = Response(clicked=0, watch_time=1.0, engagement_rate=e, observed_quality=q, topic=topic)
    t, qb, eb = disc.decode(encode_state(r, disc))
    assert t == topic
    lo, hi = disc.quality_edges[qb], disc.quality_edges[qb + 1]
    assert lo <= q <= hi
    assert eb == disc.engagement_bin(e)


@given(st.integers(0, 35))
def test_action_round_trip(a):
    disc = Discretizer()
    assert disc.encode_action(disc.decode_action(a)) == a
    assert disc.encode_action(tuple(reversed(disc.decode_action(a)))) == a


def test_quality_bin_edges(disc):
    assert [disc.quality_bin(q) for q in (-1.0, -0.5, -0.01, 0.0, 0.49, 0.5, 1.0)] == [0, 1, 1, 2, 2, 3, 3]


def test_exact_matches_are_used(disc):
    corpus = [make_video(0, 1, -0.8), make_video(1, 2, 0.7), make_video(2, 2, 0.2), make_video(3, 5, 0.9)]
    a = disc.encode_action([disc.descriptor(True, 3), disc.descriptor(True, 2)])
    assert set(realize_action(a, corpus, 2, disc).items) == {1, 2}


def test_fallback_to_best_score(disc):
    corpus = [make_video(0, 2, 0.3), make_video(1, 2, -0.4), make_video(2, 4, -0.9)]
    a = disc.encode_action([disc.descriptor(True, 3), disc.descriptor(True, 3)])
    slate = realize_action(a, corpus, 2, disc)
    assert slate.items[0] == 0  # max-score video
    assert slate.items[1] == 1  # next best of the rest


def test_realize_prefers_bin_center(disc):
    corpus = [make_video(0, 0, 0.95), make_video(1, 0, 0.76), make_video(2, 0, 0.55)]
    a = disc.encode_action([disc.descriptor(True, 3), disc.descriptor(False, 0)])
    # descriptors are stored sorted, so the on-topic top-bin pick is second
    assert realize_action(a, corpus, 0, disc).items == (0, 1)


def test_realize_then_abstract_round_trip(disc):
    rng = np.random.default_rng(0)
    centers = [disc.bin_center(b) for b in range(disc.quality_bins)]
    for a in range(disc.n_actions):
        # a corpus holding one exact match for every descriptor, plus distractors
        corpus, vid = [], 0
        for on, qb in itertools.product((False, True), range(disc.quality_bins)):
            for _ in range(2):
                q = centers[qb] + rng.uniform(-0.2, 0.2)
                corpus.append(make_video(vid, 0 if on else 1 + vid % 7, q))
                vid += 1
        slate = realize_action(a, corpus, 0, disc)
        by_id = {v.id: v for v in corpus}
        assert abstract_slate([by_id[i] for i in slate.items], 0, disc) == a


def test_realize_errors(disc):
    with pytest.raises(ValueError):
        realize_action(0, [], 0, disc)
    with pytest.raises(ValueError):
        realize_action(0, [make_video(0)], 0, disc)
