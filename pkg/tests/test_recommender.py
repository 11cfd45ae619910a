import numpy as np
import pytest

from conftest import make_video
from expertrec.dataset import ExpertStateRecord, corpus_descriptor
from expertrec.domain import sample_catalog
from expertrec.irl import Discretizer
from expertrec.recommender import ClassifierConfig, FebrAgent, StateIndex, classify
from expertrec.user_env import UserProfile, run_user_session

E_C = (0.0, 4.0, 0.1, 0.125, 4.0, 0.2)


def record(e_s, e_c=E_C, action=7, expert=0):
    return ExpertStateRecord(expert, tuple(e_s), tuple(e_c), -1, 0.0, 0.0, 0.0, 0.0, 0, action)


def test_identity_matches():
    recs = [record((0.9, -0.9)), record((0.1, 0.2))]
    assert classify((0.1, 0.2), E_C, recs) is recs[1]


def test_zero_margins_need_exact_duplicate():
    recs = [record((0.1, 0.2))]
    cfg = ClassifierConfig(0.0, 0.0)
    assert classify((0.1, 0.2000001), E_C, recs, cfg) is None
    assert classify((0.1, 0.2), E_C, recs, cfg) is recs[0]


def test_first_qualifying_record_in_scan_order():
    # interest distances 0.7, 0.4, 0.1; the second is the first within th1 = 0.5
    recs = [record((0.7, 0.0), expert=1), record((0.4, 0.0), expert=2), record((0.1, 0.0), expert=3)]
    assert classify((0.0, 0.0), E_C, recs, ClassifierConfig(0.5, 0.1)).expert_id == 2
    assert classify((0.0, 0.0), E_C, recs, ClassifierConfig(0.5, 0.1, nearest=True)).expert_id == 3


def test_corpus_margin_applies():
    recs = [record((0.0, 0.0), e_c=(0.0, 4.0, 0.5, 0.125, 4.0, 0.2))]
    assert classify((0.0, 0.0), E_C, recs, ClassifierConfig(0.5, 0.1)) is None


def test_matches_brute_force_oracle():
    rng = np.random.default_rng(0)
    recs = [record(rng.uniform(-1, 1, 4), tuple(rng.uniform(0, 1, 6))) for _ in range(300)]
    index = StateIndex(recs)
    cfg = ClassifierConfig(0.6, 0.5)
    for _ in range(200):
        u_i, u_c = rng.uniform(-1, 1, 4), rng.uniform(0, 1, 6)
        expect = next((i for i, r in enumerate(recs)
                       if np.linalg.norm(np.subtract(r.e_s, u_i)) <= 0.6
                       and np.linalg.norm(np.subtract(r.e_c, u_c)) <= 0.5), None)
        assert index.classify(u_i, u_c, cfg) == expect


def test_layout_mismatch_raises():
    with pytest.raises(ValueError):
        classify((0.0, 0.0, 0.0), E_C, [record((0.0, 0.0))])


def session(agent, budget=40.0, interests=(0.5,) * 8):
    return run_user_session(UserProfile(interests, budget), agent, sample_catalog(1, 800),
                            np.random.default_rng(2))


def test_empty_dataset_never_guides():
    log = session(FebrAgent([], Discretizer(), np.random.default_rng(0)))
    assert len(log) and not any(s.expert_guided for s in log.steps)


class Mirror:
    """A one-record dataset that always equals the current user state."""

    def __init__(self, disc):
        self.agent = FebrAgent([], disc, np.random.default_rng(0))
        self.disc = disc
        self.last_guided = False

    def recommend(self, obs):
        rec = record(obs.user.interests, corpus_descriptor(obs.corpus, 8), action=35)
        self.agent.index = StateIndex([rec])
        slate = self.agent.recommend(obs)
        self.last_guided = self.agent.last_guided
        return slate


def test_identical_record_always_guides():
    log = session(Mirror(Discretizer()))
    assert all(s.expert_guided for s in log.steps)


def test_guided_slate_realizes_policy_action():
    disc = Discretizer()
    corpus = (make_video(0, 2, 0.8), make_video(1, 2, 0.6), make_video(2, 5, -0.5))
    u = UserProfile((0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0))
    rec = record(u.interests, corpus_descriptor(corpus, 8), action=disc.encode_action([7, 7]))

    class Obs:
        pass

    obs = Obs()
    obs.corpus, obs.user = corpus, u
    agent = FebrAgent([rec], disc, np.random.default_rng(0))
    assert set(agent.recommend(obs).items) == {0, 1}
    assert agent.last_guided and agent.last_match is rec
