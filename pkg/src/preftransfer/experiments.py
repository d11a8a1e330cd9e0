"""Experiment orchestration: dataset preparation, sweeps, tables, reports."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import greedy_nearest, random_select
from .ingest import (
    Catalog,
    ServiceSplit,
    apply_pca,
    fit_pca,
    load_amazon,
    load_lastfm,
    load_movielens,
    make_split,
    target_item_list,
    user_source_set,
)
from .model import DEFAULT_LABEL_SCALE, LabeledPoint, PreferenceSet, RunConfig
from .pipeline import run_pipeline, selection_metric

KERNEL_CONVENTION = "gaussian exp(-||x-x'||^2 / (2 sigma^2))"

DATASET_DEFAULT_SIGMA = {"movielens": 1.0, "lastfm": 10.0, "amazon": 10.0}
PCA_DATASETS = {"lastfm", "amazon"}
PCA_COMPONENTS = 50


@dataclass(frozen=True)
class PreparedDataset:
    name: str
    catalog: Catalog
    prefs: dict
    features: np.ndarray  # processed (post-PCA where applicable) per catalog row
    split: ServiceSplit
    sigma: float


def prepare_dataset(
    name: str,
    data_dir,
    split_mode: str,
    seed: int,
    sigma: float | None = None,
    vocab_size: int = 5000,
) -> PreparedDataset:
    """Load, featurize (PCA + standardization where applicable), and split."""
    data_dir = Path(data_dir)
    if name == "movielens":
        catalog, prefs = load_movielens(data_dir)
        features = catalog.features
    elif name == "lastfm":
        catalog, prefs = load_lastfm(data_dir, seed=seed)
        features = None
    elif name == "amazon":
        catalog, prefs = load_amazon(data_dir, vocab_size=vocab_size)
        features = None
    else:
        raise ValueError(f"unknown dataset {name!r}")
    if name in PCA_DATASETS:
        n_comp = min(PCA_COMPONENTS, catalog.features.shape[1], len(catalog))
        model = fit_pca(catalog.features, n_comp)
        features = apply_pca(model, catalog.features)
    split = make_split(catalog.item_ids, split_mode, seed)
    return PreparedDataset(
        name=name,
        catalog=catalog,
        prefs=prefs,
        features=features,
        split=split,
        sigma=DATASET_DEFAULT_SIGMA[name] if sigma is None else sigma,
    )


def build_user_problem(ds: PreparedDataset, user: str, label_scale: float):
    """(source PreferenceSet, candidate embeddings, candidate descriptors)."""
    source = user_source_set(
        ds.catalog, ds.prefs, user, ds.split, label_scale, features=ds.features
    )
    if source is None:
        return None
    items = target_item_list(ds.catalog, ds.split, features=ds.features)
    if not items:
        return None
    cand_points = []
    descriptors = []
    for item_id, feats in items:
        for label in (1, 0):
            cand_points.append(LabeledPoint(item_id, feats, label, label_scale))
            descriptors.append((item_id, label))
    cand = np.stack([p.embedding for p in cand_points])
    return source, cand, descriptors


def eligible_users(ds: PreparedDataset, min_up: int = 2, min_down: int = 2):
    """Users with enough history inside the source service."""
    users = []
    for user in sorted(ds.prefs, key=lambda u: (len(u), u)):
        labels = [lbl for item, lbl in ds.prefs[user] if item in ds.split.source_items]
        if sum(labels) >= min_up and len(labels) - sum(labels) >= min_down:
            users.append(user)
    return users


# ---------------------------------------------------------------------------
# manifests and deterministic output

def build_manifest(params: dict, data_dir=None) -> dict:
    manifest = {
        "software_version": __version__,
        "kernel_convention": KERNEL_CONVENTION,
        "feature_standardization": "zero-mean unit-variance PCA (not unit-cube)",
        "params": {k: _jsonable(v) for k, v in sorted(params.items())},
    }
    if data_dir is not None:
        manifest["dataset_checksums"] = dataset_checksums(data_dir)
    return manifest


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def dataset_checksums(data_dir) -> dict[str, str]:
    sums = {}
    data_dir = Path(data_dir)
    if not data_dir.exists():
        return sums
    for f in sorted(data_dir.iterdir()):
        if f.is_file() and f.stat().st_size < 500 * 2**20:
            sums[f.name] = hashlib.sha256(f.read_bytes()).hexdigest()
    return sums


def manifest_hash(manifest: dict) -> str:
    return hashlib.sha256(
        json.dumps(manifest, sort_keys=True).encode()
    ).hexdigest()[:16]


def write_csv(path, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_format_cell(c) for c in row))
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")


def _format_cell(c) -> str:
    if isinstance(c, float):
        return format(c, ".12g")
    return str(c)


def write_manifest(path, manifest: dict) -> None:
    Path(path).write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")


# ---------------------------------------------------------------------------
# commands

def run_convergence(
    ds: PreparedDataset,
    users,
    k_list,
    fw_iters: int,
    trials: int,
    seed: int,
    label_scale: float = DEFAULT_LABEL_SCALE,
    exclusive: bool = False,
):
    """Continuous bound and best-of-R pipeline MMD per user per K."""
    rows = []
    for user in users:
        problem = build_user_problem(ds, user, label_scale)
        if problem is None:
            raise ValueError(f"user {user!r} has no usable source preferences")
        source, cand, _ = problem
        src_emb = source.embeddings()
        for k in k_list:
            config = RunConfig(
                k=k, fw_iters=fw_iters, rounding_trials=trials,
                seed=seed + k, metric="mmd", sigma=ds.sigma,
                label_scale=label_scale, exclusive_labels=exclusive,
            )
            res = run_pipeline(cand, src_emb, config)
            rows.append(
                [user, k, res.continuous_value, res.achieved_distance, config.seed]
            )
    header = ["user", "K", "continuous_mmd", "pipeline_mmd", "seed"]
    return header, rows


def run_table(
    ds: PreparedDataset,
    k: int,
    fw_iters: int,
    trials: int,
    seed: int,
    users=None,
    label_scale: float = DEFAULT_LABEL_SCALE,
    metric: str = "mmd",
    assert_lower_bound: bool = True,
):
    """Per-user distances for {continuous, pipeline, greedy, random} selectors."""
    if users is None:
        users = eligible_users(ds)
    per_user = []
    for ui, user in enumerate(users):
        problem = build_user_problem(ds, user, label_scale)
        if problem is None:
            continue
        source, cand, _ = problem
        src_emb = source.embeddings()
        k_eff = min(k, cand.shape[0])
        config = RunConfig(
            k=k_eff, fw_iters=fw_iters, rounding_trials=trials,
            seed=seed + 1000 * ui, metric=metric, sigma=ds.sigma,
            label_scale=label_scale,
        )
        res = run_pipeline(cand, src_emb, config)
        metric_eval = selection_metric(metric, cand, src_emb, config)
        greedy = metric_eval.distance(greedy_nearest(cand, src_emb, k_eff).indices)
        random_sel = metric_eval.distance(
            random_select(cand.shape[0], k_eff, config.seed + 1).indices
        )
        if assert_lower_bound:
            for value, tag in (
                (res.achieved_distance, "pipeline"),
                (greedy, "greedy"),
                (random_sel, "random"),
            ):
                if res.continuous_value > value + 1e-9:
                    raise AssertionError(
                        f"continuous bound {res.continuous_value} exceeds "
                        f"{tag} distance {value} for user {user}"
                    )
        per_user.append(
            [user, k_eff, res.continuous_value, res.achieved_distance,
             greedy, random_sel, config.seed]
        )
    header = ["user", "K", "continuous", "pipeline", "greedy", "random", "seed"]
    return header, per_user


def summarize_table(per_user_rows) -> dict[str, tuple[float, float]]:
    """Mean and std across users per selector column."""
    arr = np.array([[r[2], r[3], r[4], r[5]] for r in per_user_rows], dtype=float)
    names = ["continuous", "pipeline", "greedy", "random"]
    return {
        name: (float(arr[:, i].mean()), float(arr[:, i].std()))
        for i, name in enumerate(names)
    }


def run_case_study(
    ds: PreparedDataset,
    user: str,
    k: int,
    fw_iters: int,
    trials: int,
    seed: int,
    label_scale: float = DEFAULT_LABEL_SCALE,
) -> str:
    """Plain-text report of source history and the selected target items."""
    problem = build_user_problem(ds, user, label_scale)
    if problem is None:
        raise ValueError(f"user {user!r} has no usable source preferences")
    source, cand, descriptors = problem
    config = RunConfig(
        k=k, fw_iters=fw_iters, rounding_trials=trials, seed=seed,
        metric="mmd", sigma=ds.sigma, label_scale=label_scale,
    )
    res = run_pipeline(cand, source.embeddings(), config)

    source_items = {(p.item_id, p.label) for p in source.points}
    shared = ds.split.source_items & ds.split.target_items
    lines = [
        f"case study: user {user}, K={k}, dataset {ds.name}",
        f"continuous bound {res.continuous_value:.6f}, "
        f"achieved {res.achieved_distance:.6f}",
        "",
        "source thumbs up:",
    ]
    for p in source.points:
        if p.label == 1:
            lines.append(f"  + {ds.catalog.title_of(p.item_id)}")
    lines.append("source thumbs down:")
    for p in source.points:
        if p.label == 0:
            lines.append(f"  - {ds.catalog.title_of(p.item_id)}")
    lines.append("")
    lines.append("selected target items:")
    for j in res.selection.sorted_indices():
        item_id, label = descriptors[j]
        sign = "+" if label == 1 else "-"
        copy_flag = ""
        if (item_id, label) in source_items and item_id in shared:
            copy_flag = "  [exact copy]"
        lines.append(f"  {sign} {ds.catalog.title_of(item_id)}{copy_flag}")
    return "\n".join(lines) + "\n"


def run_downstream(
    ds: PreparedDataset,
    user: str,
    k: int,
    fw_iters: int,
    trials: int,
    seed: int,
    label_scale: float = DEFAULT_LABEL_SCALE,
):
    """Train a regularized logistic model on each selection, score on the source."""
    from sklearn.linear_model import LogisticRegression
    from sklearn.metrics import log_loss

    problem = build_user_problem(ds, user, label_scale)
    if problem is None:
        raise ValueError(f"user {user!r} has no usable source preferences")
    source, cand, descriptors = problem
    src_feats = np.stack([p.features for p in source.points])
    src_labels = np.array([p.label for p in source.points])

    config = RunConfig(
        k=k, fw_iters=fw_iters, rounding_trials=trials, seed=seed,
        metric="mmd", sigma=ds.sigma, label_scale=label_scale,
    )
    res = run_pipeline(cand, source.embeddings(), config)

    cand_feats = cand[:, :-1]
    cand_labels = np.array([label for _, label in descriptors])

    selections = {
        "pipeline": res.selection.sorted_indices(),
        "greedy": greedy_nearest(cand, source.embeddings(), k).sorted_indices(),
        "random": random_select(cand.shape[0], k, seed + 1).sorted_indices(),
    }

    def fit_and_score(x, y):
        if len(set(y.tolist())) < 2:
            return None  # degenerate single-class selection
        clf = LogisticRegression(C=1.0, max_iter=2000)
        clf.fit(x, y)
        probs = clf.predict_proba(src_feats)[:, 1]
        return float(log_loss(src_labels, probs, labels=[0, 1]))

    rows = []
    for name, idx in selections.items():
        idx = np.asarray(idx, dtype=int)
        loss = fit_and_score(cand_feats[idx], cand_labels[idx])
        rows.append([user, name, k, loss if loss is not None else "degenerate", seed])
    source_loss = fit_and_score(src_feats, src_labels)
    rows.append([user, "source_itself", len(source),
                 source_loss if source_loss is not None else "degenerate", seed])
    header = ["user", "selector", "K", "source_log_loss", "seed"]
    return header, rows


# ---------------------------------------------------------------------------
# minimal SVG plotting (axes + polylines)

def write_svg_lines(path, series: dict[str, list[tuple[float, float]]],
                    title: str = "", width: int = 640, height: int = 420) -> None:
    """Write a minimal SVG plot; x is plotted on a log2 scale."""
    pad = 50
    all_pts = [p for pts in series.values() for p in pts]
    xs = np.log2([p[0] for p in all_pts])
    ys = np.array([p[1] for p in all_pts])
    x0, x1 = float(xs.min()), float(max(xs.max(), xs.min() + 1e-9))
    y0, y1 = float(ys.min()), float(max(ys.max(), ys.min() + 1e-9))

    def sx(x):
        return pad + (np.log2(x) - x0) / (x1 - x0) * (width - 2 * pad)

    def sy(y):
        return height - pad - (y - y0) / (y1 - y0) * (height - 2 * pad)

    colors = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<text x="{width // 2}" y="20" text-anchor="middle">{title}</text>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
    ]
    for i, (name, pts) in enumerate(sorted(series.items())):
        color = colors[i % len(colors)]
        coords = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in pts)
        parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}"/>')
        parts.append(
            f'<text x="{width - pad + 4}" y="{pad + 16 * i}" fill="{color}" '
            f'font-size="12">{name}</text>'
        )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")
