"""Operator-facing command line.

Every command is a thin HTTP client of the service: by default the service
app is mounted in-process, so batch commands run locally with no separate
server; `--server` points the same requests at a running instance instead.

Exit codes: 0 success, 1 runtime failure, 2 usage or config error.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import httpx

from . import __version__
from .backends import parse_backend_spec
from .service.models import BackendConfig

_USAGE_STATUSES = (400, 404, 422)

_ENV_PREFIX = "ALIGNEVAL"


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise click.UsageError(f"cannot read config file {path}: {exc}")


def _resolve(flag_value, env_name: str, config: dict, config_key: str, default=None):
    """Config precedence: flags > environment > config file > default."""
    if flag_value is not None:
        return flag_value
    import os

    env_value = os.environ.get(f"{_ENV_PREFIX}_{env_name}")
    if env_value is not None:
        return env_value
    return config.get(config_key, default)


def _open_client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=600.0)
    import warnings

    with warnings.catch_warnings():
        # starlette warns about its httpx-based test client; the embedded
        # in-process transport is exactly what we want here
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient

    from .service.app import create_app

    return TestClient(
        create_app(), base_url="http://aligneval.local", raise_server_exceptions=False
    )


def _post(client: httpx.Client, path: str, payload: dict) -> dict:
    try:
        response = client.post(path, json=payload)
    except httpx.HTTPError as exc:
        click.echo(f"error: cannot reach service: {exc}", err=True)
        sys.exit(1)
    if response.status_code in _USAGE_STATUSES:
        click.echo(f"error: {_describe(response)}", err=True)
        sys.exit(2)
    if response.status_code >= 300:
        click.echo(f"error: {_describe(response)}", err=True)
        sys.exit(1)
    return response.json()


def _describe(response: httpx.Response) -> str:
    try:
        body = response.json()
        detail = body.get("detail", body)
        return f"HTTP {response.status_code}: {detail}"
    except json.JSONDecodeError:
        return f"HTTP {response.status_code}: {response.text[:200]}"


def _backend_config(
    backend_flag: str | None, model_flag: str | None, config: dict
) -> BackendConfig:
    spec = _resolve(backend_flag, "BACKEND", config, "backend")
    if not spec:
        raise click.UsageError(
            "no backend configured; pass --backend, set ALIGNEVAL_BACKEND, "
            "or put 'backend' in the config file"
        )
    model = _resolve(model_flag, "MODEL", config, "model", "gpt-4o-mini")
    try:
        descriptor = parse_backend_spec(spec, model=model)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    return BackendConfig.from_descriptor(descriptor)


server_option = click.option(
    "--server",
    default=None,
    help="Base URL of a running service; defaults to the in-process app.",
)
config_option = click.option(
    "--config", "config_path", default=None, help="JSON config file."
)
backend_option = click.option(
    "--backend", "backend_flag", default=None, help="URL, scripted:<fixture>, echo, or oracle."
)
model_option = click.option("--model", "model_flag", default=None, help="Model name.")


@click.group()
@click.version_option(version=__version__)
def main() -> None:
    """Build montage-lie benchmarks and evaluate alignment evaluators."""


@main.command("build-dataset")
@click.option("--seeds", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False, writable=True))
@click.option("--failures", default="", help="Failures JSONL path (default: <out>.failures.jsonl).")
@click.option("--seed", "master_seed", type=int, required=True, help="Master seed; all randomness derives from it.")
@backend_option
@model_option
@server_option
@config_option
def build_dataset(seeds, out, failures, master_seed, backend_flag, model_flag, server, config_path):
    """Build benchmark instances from a seed JSONL file."""
    config = _load_config_file(config_path)
    payload = {
        "seeds_path": str(seeds),
        "out_path": str(out),
        "failures_path": failures,
        "backend": _backend_config(backend_flag, model_flag, config).model_dump(),
        "master_seed": master_seed,
    }
    with _open_client(_resolve(server, "SERVER", config, "server")) as client:
        body = _post(client, "/build-dataset", payload)
    click.echo(f"seeds: {body['num_seeds']}")
    click.echo(f"instances written: {body['num_instances']} -> {body['out_path']}")
    click.echo(f"failures: {body['num_failures']} -> {body['failures_path']}")
    click.echo("lies per difficulty: " + json.dumps(body["lie_counts"]))
    click.echo("event-count histogram: " + json.dumps(body["event_count_histogram"]))


@main.command()
@click.option("--source", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--target", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--verbose", is_flag=True, help="Include the prompt/response audit trail.")
@click.option("--two-call-sorter", is_flag=True, help="Sort the target side too instead of using decomposition order.")
@backend_option
@model_option
@server_option
@config_option
def score(source, target, verbose, two_call_sorter, backend_flag, model_flag, server, config_path):
    """Score how well a target text aligns with a source text."""
    config = _load_config_file(config_path)
    payload = {
        "source": Path(source).read_text(encoding="utf-8"),
        "target": Path(target).read_text(encoding="utf-8"),
        "backend": _backend_config(backend_flag, model_flag, config).model_dump(),
        "two_call_sorter": two_call_sorter,
        "include_audit": verbose,
    }
    with _open_client(_resolve(server, "SERVER", config, "server")) as client:
        body = _post(client, "/score", payload)
    click.echo(json.dumps(body["result"], indent=2))


@main.command()
@click.option("--dataset", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--evaluator", required=True, help="dovescore | dovescore-order-blind | coarse-llm | oracle | constant.")
@click.option("--include-paraphrases", is_flag=True)
@click.option("--two-call-sorter", is_flag=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False, writable=True), help="Report JSON path.")
@click.option("--scores", default="", help="Raw scores JSONL path (default: <out>.scores.jsonl).")
@backend_option
@model_option
@server_option
@config_option
def evaluate(dataset, evaluator, include_paraphrases, two_call_sorter, out, scores,
             backend_flag, model_flag, server, config_path):
    """Evaluate an alignment evaluator over a benchmark dataset."""
    config = _load_config_file(config_path)
    needs_backend = evaluator in ("dovescore", "dovescore-order-blind", "coarse-llm")
    backend = (
        _backend_config(backend_flag, model_flag, config).model_dump()
        if needs_backend
        else None
    )
    scores_path = scores or str(Path(out).with_suffix("")) + ".scores.jsonl"
    payload = {
        "dataset_path": str(dataset),
        "evaluator": evaluator,
        "include_paraphrases": include_paraphrases,
        "two_call_sorter": two_call_sorter,
        "backend": backend,
        "out_path": str(out),
        "scores_path": scores_path,
    }
    with _open_client(_resolve(server, "SERVER", config, "server")) as client:
        body = _post(client, "/evaluate", payload)
    report = body["report"]
    click.echo(f"evaluator: {report['evaluator_name']}")
    for level, value in report["per_difficulty_auc"].items():
        click.echo(f"  auc[{level}]: {value:.4f}")
    click.echo(f"  average auc: {report['average_auc']:.4f}")
    click.echo(f"instances scored: {report['num_instances']}"
               + (f" (excluded: {body['num_excluded_instances']})" if body["num_excluded_instances"] else ""))
    click.echo(f"report -> {body['out_path']}")
    click.echo(f"raw scores -> {body['scores_path']}")


@main.command()
@click.option("--scores", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--name", "evaluator_name", default="reaggregated", help="Evaluator name to stamp on the report.")
@click.option("--out", default="", type=click.Path(dir_okay=False, writable=True), help="Also write the report JSON here.")
@server_option
@config_option
def report(scores, evaluator_name, out, server, config_path):
    """Re-aggregate persisted raw scores into a report."""
    config = _load_config_file(config_path)
    payload = {
        "scores_path": str(scores),
        "evaluator_name": evaluator_name,
        "out_path": str(out) if out else "",
    }
    with _open_client(_resolve(server, "SERVER", config, "server")) as client:
        body = _post(client, "/report", payload)
    click.echo(json.dumps(body["report"], indent=2))


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", default=8171, type=int)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service.app import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()
