"""Command-line interface for dataset ingestion, experiments, and the service."""

from __future__ import annotations

import sys
from pathlib import Path

import click
import numpy as np

from .experiments import (
    build_manifest,
    manifest_hash,
    prepare_dataset,
    run_case_study,
    run_convergence,
    run_downstream,
    run_table,
    summarize_table,
    write_csv,
    write_manifest,
    write_svg_lines,
)
from .ingest import write_catalog_csv, write_labeled_csv
from .model import DEFAULT_LABEL_SCALE

SPLIT_MODES = {"intersect": "with_intersection", "disjoint": "no_intersection"}

# out_dir changes where files land, not what they contain
SKIP_MANIFEST_KEYS = ("config_path", "out_dir")


def read_config_file(path) -> dict[str, str]:
    """Flat key=value configuration; blank lines and # comments ignored."""
    values = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise click.ClickException(f"bad config line: {line!r}")
        key, _, value = line.partition("=")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


class ConfigGroup(click.Group):
    """Lets a --config file supply defaults; explicit flags still win."""


def apply_config(ctx: click.Context, config_path):
    if not config_path:
        return
    values = read_config_file(config_path)
    for param in ctx.command.params:
        name = param.name
        if name in values and ctx.get_parameter_source(name) == click.core.ParameterSource.DEFAULT:
            ctx.params[name] = param.type.convert(values[name], param, ctx)


def common_options(fn):
    for opt in reversed(
        [
            click.option("--dataset", default="movielens",
                         type=click.Choice(["movielens", "lastfm", "amazon"])),
            click.option("--data-dir", default="data", type=click.Path()),
            click.option("--split", "split", default="intersect",
                         type=click.Choice(sorted(SPLIT_MODES))),
            click.option("--sigma", default=None, type=float,
                         help="Kernel bandwidth; dataset default when omitted."),
            click.option("--c", "--label-scale", "label_scale",
                         default=DEFAULT_LABEL_SCALE, type=float,
                         help="Scale of the label coordinate in embeddings."),
            click.option("--l", "--fw-iters", "fw_iters", default=1000, type=int),
            click.option("--r", "--trials", "trials", default=100, type=int),
            click.option("--seed", default=0, type=int),
            click.option("--exclusive-labels", is_flag=True, default=False),
            click.option("--out-dir", default="out", type=click.Path()),
            click.option("--config", "config_path", default=None, type=click.Path(exists=True)),
        ]
    ):
        fn = opt(fn)
    return fn


@click.group()
def main():
    """Preference-transfer selection experiments."""


def _prepare(dataset, data_dir, split, seed, sigma):
    return prepare_dataset(dataset, data_dir, SPLIT_MODES[split], seed, sigma=sigma)


def _finish(out_dir, stem, manifest):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_manifest(out / f"{stem}.manifest.json", manifest)
    return out


@main.command()
@common_options
@click.pass_context
def ingest(ctx, dataset, data_dir, split, sigma, label_scale, fw_iters, trials,
           seed, exclusive_labels, out_dir, config_path):
    """Load a raw dataset and write the canonical columnar files."""
    apply_config(ctx, config_path)
    p = ctx.params
    ds = _prepare(p["dataset"], p["data_dir"], p["split"], p["seed"], p["sigma"])
    manifest = build_manifest(
        {"command": "ingest", **{k: v for k, v in p.items() if k not in SKIP_MANIFEST_KEYS}},
        data_dir=p["data_dir"],
    )
    out = _finish(p["out_dir"], f"{p['dataset']}_ingest", manifest)
    feats = ds.features
    idx = ds.catalog.index()
    write_catalog_csv(
        out / f"{p['dataset']}_catalog.csv",
        [(item, feats[idx[item]]) for item in ds.catalog.item_ids],
    )
    pref_rows = []
    for user in sorted(ds.prefs, key=lambda u: (len(u), u)):
        for item, label in ds.prefs[user]:
            pref_rows.append((f"{user}:{item}", label, feats[idx[item]]))
    write_labeled_csv(out / f"{p['dataset']}_prefs.csv", pref_rows)
    click.echo(f"wrote canonical files for {p['dataset']} to {out}")


@main.command()
@common_options
@click.option("--user", "users", multiple=True, default=("308", "21"))
@click.option("--k-list", default="1,2,4,8,16,32,64,128")
@click.pass_context
def convergence(ctx, dataset, data_dir, split, sigma, label_scale, fw_iters,
                trials, seed, exclusive_labels, out_dir, config_path, users, k_list):
    """Continuous bound vs pipeline MMD over a K sweep."""
    apply_config(ctx, config_path)
    p = ctx.params
    ks = [int(k) for k in str(p["k_list"]).split(",")]
    ds = _prepare(p["dataset"], p["data_dir"], p["split"], p["seed"], p["sigma"])
    header, rows = run_convergence(
        ds, list(p["users"]), ks, p["fw_iters"], p["trials"], p["seed"],
        label_scale=p["label_scale"], exclusive=p["exclusive_labels"],
    )
    manifest = build_manifest(
        {"command": "convergence", **{k: v for k, v in p.items() if k not in SKIP_MANIFEST_KEYS},
         "users": list(p["users"]), "k_list": ks},
        data_dir=p["data_dir"],
    )
    out = _finish(p["out_dir"], "convergence", manifest)
    rows = [r + [manifest_hash(manifest)] for r in rows]
    write_csv(out / "convergence.csv", header + ["config_hash"], rows)
    for user in p["users"]:
        user_rows = [r for r in rows if r[0] == user]
        series = {
            "continuous (lower bracket)": [(r[1], r[2]) for r in user_rows],
            "pipeline best-of-R": [(r[1], r[3]) for r in user_rows],
        }
        write_svg_lines(out / f"convergence_user{user}.svg", series,
                        title=f"user {user}")
    click.echo(f"convergence results in {out}")


@main.command()
@common_options
@click.option("--k", default=100, type=int)
@click.option("--metric", default="mmd", type=click.Choice(["mmd", "w1"]))
@click.pass_context
def table(ctx, dataset, data_dir, split, sigma, label_scale, fw_iters, trials,
          seed, exclusive_labels, out_dir, config_path, k, metric):
    """Mean/std distance across users for all selectors."""
    apply_config(ctx, config_path)
    p = ctx.params
    ds = _prepare(p["dataset"], p["data_dir"], p["split"], p["seed"], p["sigma"])
    header, rows = run_table(
        ds, p["k"], p["fw_iters"], p["trials"], p["seed"],
        label_scale=p["label_scale"], metric=p["metric"],
    )
    manifest = build_manifest(
        {"command": "table", **{k_: v for k_, v in p.items() if k_ not in SKIP_MANIFEST_KEYS}},
        data_dir=p["data_dir"],
    )
    out = _finish(p["out_dir"], f"table_{p['dataset']}_{p['split']}", manifest)
    chash = manifest_hash(manifest)
    write_csv(
        out / f"table_{p['dataset']}_{p['split']}_users.csv",
        header + ["config_hash"], [r + [chash] for r in rows],
    )
    summary = summarize_table(rows)
    write_csv(
        out / f"table_{p['dataset']}_{p['split']}.csv",
        ["selector", "mean", "std", "config_hash"],
        [[name, m, s, chash] for name, (m, s) in summary.items()],
    )
    for name, (m, s) in summary.items():
        click.echo(f"{name}: {m:.6f} +- {s:.6f}")


@main.command("case-study")
@common_options
@click.option("--user", default="308")
@click.option("--k", default=20, type=int)
@click.pass_context
def case_study(ctx, dataset, data_dir, split, sigma, label_scale, fw_iters,
               trials, seed, exclusive_labels, out_dir, config_path, user, k):
    """List source history and selected target items for one user."""
    apply_config(ctx, config_path)
    p = ctx.params
    ds = _prepare(p["dataset"], p["data_dir"], p["split"], p["seed"], p["sigma"])
    report = run_case_study(
        ds, p["user"], p["k"], p["fw_iters"], p["trials"], p["seed"],
        label_scale=p["label_scale"],
    )
    manifest = build_manifest(
        {"command": "case_study", **{k_: v for k_, v in p.items() if k_ not in SKIP_MANIFEST_KEYS}},
        data_dir=p["data_dir"],
    )
    out = _finish(p["out_dir"], "case_study", manifest)
    (out / "case_study.txt").write_text(report)
    click.echo(report)


@main.command("theory-check")
@click.option("--seed", default=0, type=int)
@click.option("--trials", default=10000, type=int)
@click.option("--out-dir", default="out", type=click.Path())
def theory_check(seed, trials, out_dir):
    """Run the synthetic Monte-Carlo verification suite."""
    from .theory import run_all_checks

    results = run_all_checks(seed=seed, n_trials=trials)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = [r.line() for r in results]
    (out / "theory_check.txt").write_text("\n".join(lines) + "\n")
    for line in lines:
        click.echo(line)
    failed = sum(not r.passed for r in results)
    click.echo(f"{len(results) - failed}/{len(results)} checks passed")
    if failed:
        sys.exit(1)


@main.command()
@common_options
@click.option("--user", default="308")
@click.option("--k", default=20, type=int)
@click.pass_context
def downstream(ctx, dataset, data_dir, split, sigma, label_scale, fw_iters,
               trials, seed, exclusive_labels, out_dir, config_path, user, k):
    """Train a linear classifier on each selection; score it on the source."""
    apply_config(ctx, config_path)
    p = ctx.params
    ds = _prepare(p["dataset"], p["data_dir"], p["split"], p["seed"], p["sigma"])
    header, rows = run_downstream(
        ds, p["user"], p["k"], p["fw_iters"], p["trials"], p["seed"],
        label_scale=p["label_scale"],
    )
    manifest = build_manifest(
        {"command": "downstream", **{k_: v for k_, v in p.items() if k_ not in SKIP_MANIFEST_KEYS}},
        data_dir=p["data_dir"],
    )
    out = _finish(p["out_dir"], "downstream", manifest)
    chash = manifest_hash(manifest)
    write_csv(out / "downstream.csv", header + ["config_hash"],
              [r + [chash] for r in rows])
    for row in rows:
        click.echo(",".join(str(c) for c in row))


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", default=8000, type=int)
def serve(host, port):
    """Run the HTTP selection service."""
    import uvicorn

    from .service import app

    uvicorn.run(app, host=host, port=port)


@main.command()
@click.option("--source-file", required=True, type=click.Path(exists=True),
              help="Canonical labeled CSV of source preferences.")
@click.option("--candidates-file", required=True, type=click.Path(exists=True),
              help="Canonical catalog CSV of target items.")
@click.option("--k", required=True, type=int)
@click.option("--metric", default="mmd", type=click.Choice(["mmd", "w1"]))
@click.option("--sigma", default=1.0, type=float)
@click.option("--c", "--label-scale", "label_scale", default=DEFAULT_LABEL_SCALE, type=float)
@click.option("--l", "--fw-iters", "fw_iters", default=1000, type=int)
@click.option("--r", "--trials", "trials", default=100, type=int)
@click.option("--seed", default=0, type=int)
@click.option("--exclusive-labels", is_flag=True, default=False)
@click.option("--server", default=None,
              help="Base URL of a running service; runs locally when omitted.")
def select(source_file, candidates_file, k, metric, sigma, label_scale,
           fw_iters, trials, seed, exclusive_labels, server):
    """Select K labeled target items for one source preference set."""
    from .ingest import read_catalog_csv, read_labeled_csv

    source_rows = read_labeled_csv(source_file)
    cand_rows = read_catalog_csv(candidates_file)
    payload = {
        "source": [
            {"item_id": i, "features": f.tolist(), "label": l}
            for i, l, f in source_rows
        ],
        "candidates": [{"item_id": i, "features": f.tolist()} for i, f in cand_rows],
        "k": k, "metric": metric, "sigma": sigma, "label_scale": label_scale,
        "fw_iters": fw_iters, "rounding_trials": trials, "seed": seed,
        "exclusive_labels": exclusive_labels,
    }
    if server:
        import httpx

        resp = httpx.post(f"{server.rstrip('/')}/select", json=payload, timeout=600)
        resp.raise_for_status()
        body = resp.json()
    else:
        from .service import SelectRequest, select_endpoint

        body = select_endpoint(SelectRequest(**payload)).model_dump()
    for item in body["selected"]:
        sign = "+" if item["label"] == 1 else "-"
        click.echo(f"{sign} {item['item_id']}")
    click.echo(
        f"continuous bound {body['continuous_value']:.6f}, "
        f"achieved {body['achieved_distance']:.6f}"
    )


if __name__ == "__main__":
    main()
