import numpy as np
from scipy.stats import spearmanr

from dualhal.banks import Split, validate_pair
from dualhal.synthetic import SyntheticSpec, generate


def class_mean_matrix(bank):
    ids = sorted(c.class_id for c in bank.classes)
    means = np.array([np.asarray(bank.by_id(c).features, dtype=np.float64).mean(axis=0) for c in ids])
    return ids, means


def pairwise_sq(mat):
    diff = mat[:, None, :] - mat[None, :, :]
    return np.sum(diff * diff, axis=-1)


def test_deterministic():
    spec = SyntheticSpec(n_base=5, n_novel=3, d=6, m=3, samples_per_class=4, seed=11)
    f1, s1 = generate(spec)
    f2, s2 = generate(spec)
    assert f1 == f2 and s1 == s2


def test_generated_banks_validate():
    features, semantics = generate(SyntheticSpec(n_base=6, n_novel=3, samples_per_class=3))
    features.validate()
    semantics.validate()
    assert validate_pair(features, semantics).ok


def test_rho_one_semantic_matches_visual_ordering():
    spec = SyntheticSpec(n_base=30, n_novel=1, d=32, m=8, samples_per_class=60,
                         rho=1.0, seed=5)
    features, semantics = generate(spec)
    ids, means = class_mean_matrix(features)
    sem = np.array([np.asarray(semantics.entries[c], dtype=np.float64) for c in ids])
    vis_d = pairwise_sq(means)
    sem_d = pairwise_sq(sem)
    # Nearest-neighbor orderings should agree strongly (softplus and the
    # random semantic-to-visual map distort distances, so demand high rank
    # correlation rather than exact ordering equality).
    rhos = []
    for i in range(len(ids)):
        mask = np.arange(len(ids)) != i
        rho, _ = spearmanr(vis_d[i][mask], sem_d[i][mask])
        rhos.append(rho)
    assert min(rhos) > 0.6, min(rhos)
    assert np.mean(rhos) > 0.85


def test_rho_zero_uncorrelated():
    spec = SyntheticSpec(n_base=50, n_novel=1, d=32, m=8, samples_per_class=2,
                         rho=0.0, seed=6)
    features, semantics = generate(spec)
    ids, means = class_mean_matrix(features)
    sem = np.array([np.asarray(semantics.entries[c], dtype=np.float64) for c in ids])
    iu = np.triu_indices(len(ids), k=1)
    rho, _ = spearmanr(pairwise_sq(means)[iu], pairwise_sq(sem)[iu])
    assert abs(rho) < 0.2


def test_within_class_covariance_converges():
    spec = SyntheticSpec(n_base=1, n_novel=1, d=8, m=4, samples_per_class=10_000,
                         spread=0.3, seed=7, mean_scale=2.0)
    features, _ = generate(spec)
    rows = np.asarray(features.classes[0].features, dtype=np.float64)
    # clamping at 0 is rare when means are well above 0
    cov = np.cov(rows.T)
    true = 0.09 * np.eye(8)
    assert np.linalg.norm(cov - true) <= 0.05 * np.linalg.norm(true)


def test_split_structure():
    features, _ = generate(SyntheticSpec(n_base=4, n_novel=3, n_validation=2, samples_per_class=2))
    assert len(features.class_ids(Split.BASE)) == 4
    assert len(features.class_ids(Split.VALIDATION)) == 2
    assert len(features.class_ids(Split.NOVEL)) == 3
