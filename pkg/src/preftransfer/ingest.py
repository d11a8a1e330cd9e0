"""Dataset loaders, PCA, service splits, and the canonical CSV interchange.

Supported raw formats:
  * MovieLens-100K: ``u.data`` (tab-separated user/item/rating/timestamp) and
    ``u.item`` (pipe-separated with release date and 19 trailing genre flags).
  * HetRec Last.fm: ``user_artists.dat`` and ``user_taggedartists.dat``.
  * Amazon-review style: line-delimited JSON records with reviewer, item,
    rating, and review text fields.
"""

from __future__ import annotations

import json
import re
import warnings
from collections import Counter, defaultdict
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import LabeledPoint, PreferenceSet

MOVIELENS_GENRES = 19
MOVIELENS_FEATURE_DIM = 90
MOVIELENS_YEAR_BINS = MOVIELENS_FEATURE_DIM - MOVIELENS_GENRES - 1  # +1 unknown bin
POSITIVE_RATING = 4


@dataclass(frozen=True)
class Catalog:
    """All items of one dataset with their raw feature vectors."""

    item_ids: tuple[str, ...]
    features: np.ndarray
    titles: tuple[str, ...] | None = None

    def __post_init__(self):
        if len(self.item_ids) != self.features.shape[0]:
            raise ValueError("item_ids / features length mismatch")

    def __len__(self) -> int:
        return len(self.item_ids)

    def index(self) -> dict[str, int]:
        return {item: i for i, item in enumerate(self.item_ids)}

    def title_of(self, item_id: str) -> str:
        if self.titles is None:
            return item_id
        return self.titles[self.index()[item_id]]


# preferences: user id -> list of (item_id, label) in file order
Preferences = dict[str, list[tuple[str, int]]]


def load_movielens(path) -> tuple[Catalog, Preferences]:
    """Load MovieLens-100K: 19 genre flags plus one-hot release-year bins.

    The year encoding uses 70 one-hot bins covering the most recent 70 release
    years (earlier years merge into the oldest bin) plus one bin for items
    with an unparseable date, giving 19 + 71 = 90 binary dimensions.
    """
    path = Path(path)
    item_file = path / "u.item"
    data_file = path / "u.data"
    for f in (item_file, data_file):
        if not f.exists():
            raise FileNotFoundError(f"missing MovieLens file: {f}")

    raw_items = []
    for line in item_file.read_text(encoding="latin-1").splitlines():
        if not line.strip():
            continue
        parts = line.split("|")
        if len(parts) < 5 + MOVIELENS_GENRES:
            raise ValueError(f"malformed u.item row: {line[:60]!r}")
        item_id, title, release = parts[0], parts[1], parts[2]
        genres = np.array([int(g) for g in parts[-MOVIELENS_GENRES:]], dtype=float)
        year = _parse_year(release)
        raw_items.append((item_id, title, year, genres))

    known_years = [y for _, _, y, _ in raw_items if y is not None]
    latest = max(known_years) if known_years else 0
    first_bin_year = latest - (MOVIELENS_YEAR_BINS - 1)

    ids, titles, rows = [], [], []
    for item_id, title, year, genres in raw_items:
        year_vec = np.zeros(MOVIELENS_YEAR_BINS + 1)
        if year is None:
            year_vec[-1] = 1.0  # unknown-year bin
        else:
            year_vec[max(year, first_bin_year) - first_bin_year] = 1.0
        ids.append(item_id)
        titles.append(title)
        rows.append(np.concatenate([genres, year_vec]))
    catalog = Catalog(tuple(ids), np.stack(rows), tuple(titles))

    prefs: Preferences = defaultdict(list)
    known = set(ids)
    skipped = 0
    for line in data_file.read_text().splitlines():
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) < 3:
            skipped += 1
            continue
        user, item, rating = parts[0], parts[1], parts[2]
        try:
            label = 1 if int(rating) >= POSITIVE_RATING else 0
        except ValueError:
            skipped += 1
            continue
        if item not in known:
            skipped += 1
            continue
        prefs[user].append((item, label))
    if skipped:
        warnings.warn(f"skipped {skipped} malformed MovieLens rating rows")

    if len(catalog) == 1682:  # the real 100K catalog: check the reference user
        ups = sum(lbl for _, lbl in prefs.get("308", []))
        downs = sum(1 - lbl for _, lbl in prefs.get("308", []))
        if (ups, downs) != (10, 10):
            raise AssertionError(
                f"reference user 308 has {ups} up / {downs} down, expected 10/10"
            )
    return catalog, dict(prefs)


def _parse_year(release: str):
    match = re.search(r"(\d{4})", release or "")
    return int(match.group(1)) if match else None


def load_lastfm(path, seed: int = 0) -> tuple[Catalog, Preferences]:
    """Load HetRec Last.fm: listened artists are thumbs up, and an equal
    number of seeded random unlistened artists per user are thumbs down.
    Raw features are tag-count vectors."""
    path = Path(path)
    ua_file = path / "user_artists.dat"
    tag_file = path / "user_taggedartists.dat"
    for f in (ua_file, tag_file):
        if not f.exists():
            raise FileNotFoundError(f"missing Last.fm file: {f}")

    tag_counts: dict[str, Counter] = defaultdict(Counter)
    all_tags: set[str] = set()
    for line in tag_file.read_text(encoding="latin-1").splitlines()[1:]:
        parts = line.split("\t")
        if len(parts) < 3:
            continue
        artist, tag = parts[1], parts[2]
        tag_counts[artist][tag] += 1
        all_tags.add(tag)

    listened: dict[str, list[str]] = defaultdict(list)
    artists: set[str] = set(tag_counts)
    for line in ua_file.read_text().splitlines()[1:]:
        parts = line.split("\t")
        if len(parts) < 3:
            continue
        user, artist, weight = parts[0], parts[1], parts[2]
        artists.add(artist)
        if float(weight) > 0:
            listened[user].append(artist)

    tag_order = sorted(all_tags, key=lambda t: (len(t), t))
    tag_index = {t: i for i, t in enumerate(tag_order)}
    ids = sorted(artists, key=lambda a: (len(a), a))
    features = np.zeros((len(ids), max(len(tag_order), 1)))
    for i, artist in enumerate(ids):
        for tag, count in tag_counts.get(artist, {}).items():
            features[i, tag_index[tag]] = count
    catalog = Catalog(tuple(ids), features)

    prefs: Preferences = {}
    id_array = np.array(ids)
    for user in sorted(listened, key=lambda u: (len(u), u)):
        pos = listened[user]
        pos_set = set(pos)
        candidates = np.array([a for a in id_array if a not in pos_set])
        # per-user stream so negatives don't depend on user iteration order
        rng = np.random.default_rng(
            [seed, int.from_bytes(user.encode(), "little") % (2**31)]
        )
        n_neg = min(len(pos), candidates.size)
        negs = rng.choice(candidates, size=n_neg, replace=False)
        prefs[user] = [(a, 1) for a in pos] + [(str(a), 0) for a in negs]
    return catalog, prefs


def load_amazon(path, vocab_size: int = 5000) -> tuple[Catalog, Preferences]:
    """Load line-delimited Amazon-style reviews into bag-of-words features.

    Tokenization is lowercased alphanumeric; the vocabulary keeps the
    ``vocab_size`` most frequent terms (ties broken alphabetically).
    """
    path = Path(path)
    if path.is_dir():
        matches = sorted(path.glob("*.json*"))
        if not matches:
            raise FileNotFoundError(f"no review file found under {path}")
        path = matches[0]
    if not path.exists():
        raise FileNotFoundError(f"missing Amazon review file: {path}")

    records = []
    for line in path.read_text().splitlines():
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError:
            warnings.warn(f"skipping malformed review line: {line[:40]!r}")
            continue
        reviewer = rec.get("reviewerID") or rec.get("reviewer") or rec.get("user")
        item = rec.get("asin") or rec.get("item")
        rating = rec.get("overall") if "overall" in rec else rec.get("rating")
        text = rec.get("reviewText") or rec.get("text") or ""
        if reviewer is None or item is None or rating is None:
            warnings.warn("skipping review record with missing fields")
            continue
        records.append((str(reviewer), str(item), float(rating), str(text)))
    if not records:
        raise ValueError(f"no usable review records in {path}")

    corpus_counts: Counter = Counter()
    for _, _, _, text in records:
        corpus_counts.update(_tokenize(text))
    vocab = sorted(corpus_counts, key=lambda t: (-corpus_counts[t], t))[:vocab_size]
    vocab_index = {t: i for i, t in enumerate(vocab)}

    item_tokens: dict[str, Counter] = defaultdict(Counter)
    prefs: Preferences = defaultdict(list)
    for reviewer, item, rating, text in records:
        item_tokens[item].update(_tokenize(text))
        prefs[reviewer].append((item, 1 if rating >= POSITIVE_RATING else 0))

    ids = sorted(item_tokens)
    features = np.zeros((len(ids), max(len(vocab), 1)))
    for i, item in enumerate(ids):
        for tok, count in item_tokens[item].items():
            if tok in vocab_index:
                features[i, vocab_index[tok]] = count
    return Catalog(tuple(ids), features), dict(prefs)


def _tokenize(text: str) -> list[str]:
    return re.findall(r"[a-z0-9']+", text.lower())


@dataclass(frozen=True)
class PcaModel:
    """Orthonormal principal components with per-component unit-variance scaling."""

    mean: np.ndarray
    components: np.ndarray  # (d_raw, k)
    scales: np.ndarray  # (k,)

    @property
    def n_components(self) -> int:
        return self.components.shape[1]


def fit_pca(features: np.ndarray, n_components: int = 50) -> PcaModel:
    x = np.asarray(features, dtype=float)
    n, d = x.shape
    if n_components > d:
        raise ValueError(f"n_components={n_components} exceeds dimension {d}")
    if n < n_components:
        raise ValueError("need at least as many samples as components")
    mean = x.mean(axis=0)
    _, s, vt = np.linalg.svd(x - mean, full_matrices=False)
    components = vt[:n_components].T
    variances = (s[:n_components] ** 2) / n
    scales = np.zeros(n_components)
    positive = variances > 1e-12
    scales[positive] = 1.0 / np.sqrt(variances[positive])
    if not positive.all():
        warnings.warn(
            f"{int((~positive).sum())} zero-variance components scaled to zero"
        )
    return PcaModel(mean=mean, components=components, scales=scales)


def apply_pca(model: PcaModel, features: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(np.asarray(features, dtype=float))
    return (x - model.mean) @ model.components * model.scales


@dataclass(frozen=True)
class ServiceSplit:
    """Item universes of the virtual source and target services."""

    source_items: frozenset[str]
    target_items: frozenset[str]
    mode: str
    seed: int


def make_split(item_ids, mode: str, seed: int) -> ServiceSplit:
    """Split the catalog into source/target services.

    ``with_intersection`` includes each item in each service independently
    with probability 0.5; ``no_intersection`` partitions the catalog in two.
    A draw leaving either service empty is retried with an incremented seed.
    """
    item_ids = list(item_ids)
    if mode not in ("with_intersection", "no_intersection"):
        raise ValueError(f"unknown split mode {mode!r}")
    attempt_seed = seed
    for _ in range(1000):
        rng = np.random.default_rng(attempt_seed)
        if mode == "with_intersection":
            in_s = rng.random(len(item_ids)) < 0.5
            in_t = rng.random(len(item_ids)) < 0.5
        else:
            perm = rng.permutation(len(item_ids))
            half = len(item_ids) // 2
            in_s = np.zeros(len(item_ids), dtype=bool)
            in_s[perm[:half]] = True
            in_t = ~in_s
        src = frozenset(i for i, keep in zip(item_ids, in_s) if keep)
        tgt = frozenset(i for i, keep in zip(item_ids, in_t) if keep)
        if src and tgt:
            if attempt_seed != seed:
                warnings.warn(f"split resampled with seed {attempt_seed}")
            return ServiceSplit(src, tgt, mode, attempt_seed)
        attempt_seed += 1
    raise RuntimeError("could not produce a nonempty split")


def user_source_set(
    catalog: Catalog,
    prefs: Preferences,
    user: str,
    split: ServiceSplit,
    label_scale: float,
    features: np.ndarray | None = None,
) -> PreferenceSet | None:
    """The user's preferences restricted to the source service's items."""
    if user not in prefs:
        return None
    feats = catalog.features if features is None else features
    idx = catalog.index()
    points = [
        LabeledPoint(item, feats[idx[item]], label, label_scale)
        for item, label in prefs[user]
        if item in split.source_items
    ]
    return PreferenceSet(tuple(points)) if points else None


def target_item_list(
    catalog: Catalog, split: ServiceSplit, features: np.ndarray | None = None
):
    """(item_id, features) pairs for the target service, in catalog order."""
    feats = catalog.features if features is None else features
    idx = catalog.index()
    return [(item, feats[idx[item]]) for item in catalog.item_ids if item in split.target_items]


# ---------------------------------------------------------------------------
# canonical columnar interchange (header row; item_id, label, features)

def write_labeled_csv(path, rows) -> None:
    """Write (item_id, label, feature-vector) rows with a self-describing header."""
    rows = [(str(i), int(l), np.asarray(f, dtype=float)) for i, l, f in rows]
    if not rows:
        raise ValueError("no rows to write")
    dim = rows[0][2].size
    lines = ["item_id,label," + ",".join(f"f{i}" for i in range(dim))]
    for item_id, label, feats in rows:
        if feats.size != dim:
            raise ValueError("inconsistent feature dimension")
        lines.append(f"{item_id},{label}," + ",".join(repr(float(v)) for v in feats))
    Path(path).write_text("\n".join(lines) + "\n")


def read_labeled_csv(path):
    """Read rows written by :func:`write_labeled_csv`."""
    lines = Path(path).read_text().splitlines()
    header = lines[0].split(",")
    if header[:2] != ["item_id", "label"]:
        raise ValueError(f"unexpected header in {path}: {header[:2]}")
    rows = []
    for line in lines[1:]:
        if not line.strip():
            continue
        parts = line.split(",")
        rows.append((parts[0], int(parts[1]), np.array([float(v) for v in parts[2:]])))
    return rows


def write_catalog_csv(path, items) -> None:
    """Write (item_id, feature-vector) pairs; label column fixed at 0 and ignored on read."""
    write_labeled_csv(path, [(i, 0, f) for i, f in items])


def read_catalog_csv(path):
    return [(item_id, feats) for item_id, _, feats in read_labeled_csv(path)]
