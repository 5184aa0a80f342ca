"""``lexent`` command line: a thin client of the HTTP service.

Without ``--server`` the requests go to an in-process instance of the app.
"""

from __future__ import annotations

import json
import os
import sys
import warnings

import click


def _client(server):
    if server:
        import httpx

        return httpx.Client(base_url=server, timeout=None)
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="Using `httpx` with")
        from fastapi.testclient import TestClient

    from .service.app import app

    return TestClient(app)


def _post(ctx, route, payload):
    resp = ctx.obj["client"].post(route, json=payload)
    if resp.status_code >= 400:
        try:
            detail = resp.json().get("detail")
        except ValueError:
            detail = resp.text
        raise click.ClickException(f"{route}: {detail}")
    return resp.json()


def _abs(path):
    return os.path.abspath(path)


def _echo_json(obj):
    click.echo(json.dumps(obj, indent=2, sort_keys=True))


@click.group()
@click.option("--server", default=None, help="Base URL of a running lexent service.")
@click.pass_context
def main(ctx, server):
    """Lexical-entailment experiments over pretrained word embeddings."""
    ctx.ensure_object(dict)
    ctx.obj["client"] = _client(server)


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", default=8000, type=int)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    uvicorn.run("lexent.service.app:app", host=host, port=port)


@main.group()
def embed():
    """Embedding files."""


@embed.command("info")
@click.argument("path")
@click.option("--format", "fmt", type=click.Choice(["glove_text", "word2vec_binary"]), default=None)
@click.pass_context
def embed_info(ctx, path, fmt):
    info = _post(ctx, "/embeddings/info", {"path": _abs(path), "format": fmt})
    click.echo(f"dim\t{info['dim']}\nvocab\t{info['vocab_size']}\nformat\t{info['format']}")


@main.group()
def data():
    """Dataset ingestion and statistics."""


@data.command("ingest")
@click.option("--dataset", required=True, help="bless, khn, root09 or evalution")
@click.option("--in", "in_path", required=True)
@click.option("--out", "out_path", required=True)
@click.pass_context
def data_ingest(ctx, dataset, in_path, out_path):
    _echo_json(_post(ctx, "/datasets/ingest",
                     {"dataset": dataset, "in_path": _abs(in_path), "out_path": _abs(out_path)}))


@data.command("stats")
@click.argument("path")
@click.pass_context
def data_stats(ctx, path):
    _echo_json(_post(ctx, "/datasets/stats", {"path": _abs(path)}))


@main.command()
@click.option("--protocol", type=click.Choice(["rand", "lex", "ood"]), required=True)
@click.option("--seed", type=int, default=0)
@click.option("--in", "in_path", required=True)
@click.option("--out", "out_path", required=True)
@click.option("--ratios", default="0.70,0.05,0.25", help="train,validation,test")
@click.pass_context
def split(ctx, protocol, seed, in_path, out_path, ratios):
    """Write a fold file for a normalized dataset."""
    ratio_list = [float(r) for r in ratios.split(",")]
    res = _post(ctx, "/splits", {"protocol": protocol, "seed": seed, "in_path": _abs(in_path),
                                 "out_path": _abs(out_path), "ratios": ratio_list})
    for i, f in enumerate(res["folds"]):
        dom = f" held_out={f['held_out_domain']} validation={f['validation_domain']}" \
            if f["held_out_domain"] else ""
        click.echo(f"fold {i}: train={f['train']} validation={f['validation']} "
                   f"test={f['test']} discarded={f['discarded']}{dom}")


@main.command("run")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--repeats", type=int, default=None, help="Repeated splits with seed offsets.")
@click.option("--no-wait", is_flag=True, help="Submit and print the job id.")
@click.pass_context
def run_cmd(ctx, config_path, repeats, no_wait):
    """Run an experiment config; writes run.json under output_dir."""
    with open(config_path, "r", encoding="utf-8") as fh:
        config = json.load(fh)
    base = os.path.dirname(_abs(config_path))
    # relative paths in a config are relative to the config file
    for section, key in (("embedding", "path"), ("dataset", "path")):
        config[section][key] = os.path.join(base, config[section][key])
    for key in ("output_dir", "cache_dir"):
        if config.get(key):
            config[key] = os.path.join(base, config[key])
    if repeats is not None:
        config["repeats"] = repeats
    job = _post(ctx, "/runs", {"config": config, "wait": not no_wait})
    if job["state"] == "failed":
        raise click.ClickException(job["error"])
    if no_wait:
        click.echo(job["job_id"])
        return
    for row in job["summary"] or []:
        if row["status"] == "ok":
            click.echo(f"{row['key']}\tweighted_f1={row['weighted_f1']:.4f}\t"
                       f"macro_f1={row['macro_f1']:.4f}")
        else:
            click.echo(f"{row['key']}\tFAILED")
    click.echo(os.path.join(job["output_dir"], "run.json"))


@main.command()
@click.option("--record", required=True, type=click.Path(exists=True))
@click.option("--a", "cell_a", required=True, help="composer:family, e.g. concat:lr")
@click.option("--b", "cell_b", required=True)
@click.pass_context
def compare(ctx, record, cell_a, cell_b):
    """Gains of cell b over cell a."""
    res = _post(ctx, "/compare", {"record_path": _abs(record), "a": cell_a, "b": cell_b})
    click.echo(f"{'metric':<20}{res['a']:>16}{res['b']:>16}  gain")
    for row in res["rows"]:
        click.echo(f"{row['metric']:<20}{row['a']:>16.1f}{row['b']:>16.1f}  ({row['formatted']})")


@main.command()
@click.option("--record", required=True, type=click.Path(exists=True))
@click.option("--format", "fmt", type=click.Choice(["json", "csv", "md"]), default="md")
@click.option("--metric", type=click.Choice(["macro_f1", "weighted_f1"]), default=None)
@click.pass_context
def report(ctx, record, fmt, metric):
    """Render a run record."""
    res = _post(ctx, "/report", {"record_path": _abs(record), "format": fmt, "metric": metric})
    sys.stdout.write(res["text"])


@main.command()
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--embeddings", required=True, type=click.Path(exists=True))
@click.option("--exclude-oov", is_flag=True)
@click.pass_context
def similarity(ctx, data_path, embeddings, exclude_oov):
    """Mean x-y cosine per relation."""
    res = _post(ctx, "/analysis/similarity", {"dataset_path": _abs(data_path),
                                              "embedding_path": _abs(embeddings),
                                              "exclude_oov": exclude_oov})
    for rel, val in sorted(res["per_relation_mean_cosine"].items(), key=lambda kv: -kv[1]):
        click.echo(f"{rel}\t{val:.3f}\tn={res['counts'][rel]}\tin_vocab={res['in_vocab_counts'][rel]}")


if __name__ == "__main__":
    main()
