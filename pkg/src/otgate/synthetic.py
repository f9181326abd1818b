"""Synthetic gated cytometries with a planted group structure.

Each group has its own base mixture of ``clusters`` labeled populations
(labels ``P1..Pk`` are shared across groups). Member cytometries perturb the
base means and covariances and sample events from the result; an optional
fraction of uniform background events is labeled ``noise``.
"""

import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from .errors import ArgumentError, GenerationError
from .summary import ClusterModel, CytometrySummary, LabeledEvents

NOISE_LABEL = "noise"


@dataclass
class SyntheticSpec:
    groups: int = 3
    per_group: int = 9
    clusters: int = 5
    dim: int = 4
    mean_jitter: float = 0.3
    cov_jitter: float = 0.05
    noise: float = 0.0
    seed: int = 0
    events: int = 1500
    test_per_group: int = 1
    separation: float = 10.0
    box: float | None = None

    def __post_init__(self):
        for name in ("groups", "per_group", "clusters", "dim", "events"):
            if getattr(self, name) < 1:
                raise ArgumentError(f"{name} must be at least 1")
        if self.test_per_group < 0:
            raise ArgumentError("test_per_group must be nonnegative")
        if self.mean_jitter < 0 or self.cov_jitter < 0:
            raise ArgumentError("jitter scales must be nonnegative")
        if not 0.0 <= self.noise < 1.0:
            raise ArgumentError("noise fraction must lie in [0, 1)")
        if self.separation < 0:
            raise ArgumentError("separation must be nonnegative")

    @classmethod
    def from_dict(cls, doc):
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known - {"schema", "version"}
        if unknown:
            raise ArgumentError(f"unknown synthetic spec fields {sorted(unknown)}")
        return cls(**{k: v for k, v in doc.items() if k in known})

    def to_dict(self):
        return asdict(self)


@dataclass
class SyntheticSample:
    id: str
    group: int
    role: str
    events: LabeledEvents


@dataclass
class SyntheticDataset:
    spec: SyntheticSpec
    samples: list
    templates: list

    @property
    def database(self):
        return [s for s in self.samples if s.role == "database"]

    @property
    def tests(self):
        return [s for s in self.samples if s.role == "test"]


def _separated_means(rng, count, dim, separation, box):
    means = []
    for _ in range(count):
        for _attempt in range(2000):
            candidate = rng.uniform(0.0, box, dim)
            if all(np.linalg.norm(candidate - m) >= separation for m in means):
                means.append(candidate)
                break
        else:
            raise GenerationError(
                f"could not place {count} means {separation} apart in a box of side {box:g} (d={dim})"
            )
    return np.array(means)


def _random_cov(rng, dim):
    q, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
    values = rng.uniform(0.5, 1.5, dim)
    cov = (q * values) @ q.T
    return 0.5 * (cov + cov.T)


def _perturb_cov(rng, cov, scale):
    if scale == 0:
        return cov.copy()
    g = rng.normal(size=cov.shape)
    r = np.eye(cov.shape[0]) + scale * 0.5 * (g + g.T)
    out = r @ cov @ r.T
    return 0.5 * (out + out.T)


def _sample(rng, spec, means, covs, weights):
    n_noise = int(round(spec.noise * spec.events))
    counts = rng.multinomial(spec.events - n_noise, weights)
    blocks, labels = [], []
    for j, (m, s, c) in enumerate(zip(means, covs, counts)):
        blocks.append(rng.multivariate_normal(m, s, size=c, method="cholesky"))
        labels += [f"P{j + 1}"] * int(c)
    x = np.vstack(blocks)
    if n_noise:
        lo, hi = x.min(axis=0), x.max(axis=0)
        x = np.vstack([x, rng.uniform(lo, hi, size=(n_noise, spec.dim))])
        labels += [NOISE_LABEL] * n_noise
    order = rng.permutation(x.shape[0])
    markers = [f"m{i + 1}" for i in range(spec.dim)]
    return LabeledEvents(x[order], np.array(labels, dtype=object)[order], markers)


def generate_synthetic(spec=None):
    """Draw a dataset of ``groups * (per_group + test_per_group)`` labeled
    cytometries; the result is a deterministic function of ``spec``.

    All population means of all groups are at least ``separation`` apart;
    ``box`` (default: large enough for easy placement) bounds their
    coordinates.
    """
    spec = spec or SyntheticSpec()
    rng = np.random.default_rng(spec.seed)
    total = spec.groups * spec.clusters
    box = spec.box
    if box is None:
        box = spec.separation * max(2.0, 2.0 * math.ceil(total ** (1.0 / spec.dim)))
    all_means = _separated_means(rng, total, spec.dim, spec.separation, box)

    templates, samples = [], []
    for g in range(spec.groups):
        means = all_means[g * spec.clusters:(g + 1) * spec.clusters]
        covs = [_random_cov(rng, spec.dim) for _ in range(spec.clusters)]
        weights = rng.dirichlet(np.full(spec.clusters, 5.0))
        weights = np.maximum(weights, 0.05)
        weights = weights / weights.sum()
        templates.append(CytometrySummary(
            [ClusterModel(m, s, w, f"P{j + 1}") for j, (m, s, w) in enumerate(zip(means, covs, weights))],
            f"base-g{g + 1}",
        ))
        members = [("database", i) for i in range(spec.per_group)]
        members += [("test", i) for i in range(spec.test_per_group)]
        for role, i in members:
            m_i = [m + spec.mean_jitter * rng.normal(size=spec.dim) for m in means]
            s_i = [_perturb_cov(rng, s, spec.cov_jitter) for s in covs]
            name = f"g{g + 1}-{'c' if role == 'database' else 't'}{i + 1:02d}"
            samples.append(SyntheticSample(name, g + 1, role, _sample(rng, spec, m_i, s_i, weights)))
    return SyntheticDataset(spec, samples, templates)
