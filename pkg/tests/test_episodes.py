import numpy as np
import pytest

from dualhal.episodes import EpisodeSpec, derive_episode_seed, sample_episode
from dualhal.synthetic import SyntheticSpec, generate


def make_bank(n_novel=20, samples=40):
    bank, _ = generate(SyntheticSpec(n_base=4, n_novel=n_novel, d=8, m=4,
                                     samples_per_class=samples, seed=1))
    return bank


def test_seed_determinism():
    assert derive_episode_seed(42, 7) == derive_episode_seed(42, 7)


def test_seed_index_sensitivity():
    assert derive_episode_seed(42, 0) != derive_episode_seed(42, 1)


def test_seed_master_sensitivity():
    assert derive_episode_seed(42, 3) != derive_episode_seed(43, 3)


def test_seed_negative_index():
    with pytest.raises(ValueError):
        derive_episode_seed(1, -1)


def test_sample_episode_deterministic():
    bank = make_bank()
    spec = EpisodeSpec(n_way=5, k_shot=1, m_query=15, episode_count=10, master_seed=9)
    a = sample_episode(bank, spec, 3)
    b = sample_episode(bank, spec, 3)
    assert a.class_ids == b.class_ids
    assert np.array_equal(a.support, b.support)
    assert np.array_equal(a.query, b.query)


def test_exhaustive_when_exact_fit():
    bank = make_bank(n_novel=5, samples=16)
    spec = EpisodeSpec(n_way=5, k_shot=1, m_query=15, episode_count=1, master_seed=0)
    ep = sample_episode(bank, spec, 0)
    assert sorted(ep.class_ids) == sorted(c for c in bank.class_ids() if c.startswith("novel"))
    # every row of every chosen class is used
    assert ep.support.shape == (5, 8)
    assert ep.query.shape == (75, 8)


def test_insufficient_classes():
    bank = make_bank(n_novel=3)
    spec = EpisodeSpec(n_way=5, k_shot=1, m_query=5, episode_count=1, master_seed=0)
    with pytest.raises(ValueError, match="insufficient classes"):
        sample_episode(bank, spec, 0)


def test_insufficient_samples():
    bank = make_bank(n_novel=6, samples=4)
    spec = EpisodeSpec(n_way=5, k_shot=1, m_query=15, episode_count=1, master_seed=0)
    with pytest.raises(ValueError, match="insufficient samples"):
        sample_episode(bank, spec, 0)


def test_support_query_disjoint_and_label_counts():
    bank = make_bank()
    spec = EpisodeSpec(n_way=5, k_shot=3, m_query=7, episode_count=1, master_seed=5)
    for i in range(10):
        ep = sample_episode(bank, spec, i)
        for cid in ep.class_ids:
            s_rows = ep.support[[j for j, c in enumerate(ep.support_labels) if c == cid]]
            q_rows = ep.query[[j for j, c in enumerate(ep.query_labels) if c == cid]]
            s_set = {tuple(r) for r in s_rows}
            q_set = {tuple(r) for r in q_rows}
            assert not (s_set & q_set)
        assert sorted(ep.support_labels) == sorted(ep.class_ids * 3)
        assert len(ep.query_labels) == 35


def test_marginal_uniformity():
    bank = make_bank(n_novel=20, samples=20)
    spec = EpisodeSpec(n_way=5, k_shot=1, m_query=10, episode_count=10_000, master_seed=123)
    counts = {c: 0 for c in bank.class_ids() if c.startswith("novel")}
    for i in range(spec.episode_count):
        for c in sample_episode(bank, spec, i).class_ids:
            counts[c] += 1
    t, n, total = spec.episode_count, spec.n_way, 20
    expected = t * n / total
    p = n / total
    sd = np.sqrt(t * p * (1 - p))
    for c, cnt in counts.items():
        assert abs(cnt - expected) < 5 * sd, (c, cnt)
