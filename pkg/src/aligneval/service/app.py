"""HTTP service wrapping the core pipelines.

Input problems (missing files, empty texts, unknown evaluators) map to 400;
pipeline and upstream-model failures map to 500 so clients can tell usage
errors from runtime ones.
"""

from __future__ import annotations

import json
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__, builder, corpus, harness
from ..backends import BackendFailure, make_backend
from ..dovescore import evaluate as dovescore_evaluate
from ..errors import AlignEvalError
from ..permutations import DIFFICULTIES
from . import models


class UsageProblem(AlignEvalError):
    """Caller input the service can reject up front."""


def _require_file(path: str, what: str) -> Path:
    resolved = Path(path)
    if not resolved.is_file():
        raise UsageProblem(f"{what} not found: {path}")
    return resolved


def create_app() -> FastAPI:
    app = FastAPI(title="aligneval", version=__version__)

    @app.exception_handler(UsageProblem)
    async def usage_problem(request: Request, exc: UsageProblem) -> JSONResponse:
        return JSONResponse(
            status_code=400,
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    @app.exception_handler(AlignEvalError)
    async def domain_error(request: Request, exc: AlignEvalError) -> JSONResponse:
        root: BaseException = exc
        while getattr(root, "cause", None) is not None:
            root = root.cause  # stage wrappers keep the original failure here
        status = 502 if isinstance(root, BackendFailure) else 500
        return JSONResponse(
            status_code=status,
            content={"error": type(root).__name__, "detail": str(exc)},
        )

    @app.get("/health", response_model=models.HealthResponse)
    def health() -> models.HealthResponse:
        return models.HealthResponse(status="ok", version=__version__)

    @app.post("/score", response_model=models.ScoreResponse)
    def score(request: models.ScoreRequest) -> models.ScoreResponse:
        if not request.source.strip():
            raise UsageProblem("source text is empty")
        if not request.target.strip():
            raise UsageProblem("target text is empty")
        backend = make_backend(request.backend.to_descriptor())
        result = dovescore_evaluate(
            request.source,
            request.target,
            backend,
            two_call_sorter=request.two_call_sorter,
        )
        if not request.include_audit:
            result = result.model_copy(update={"audit": []})
        return models.ScoreResponse(result=result)

    @app.post("/build-dataset", response_model=models.BuildDatasetResponse)
    def build_dataset(
        request: models.BuildDatasetRequest,
    ) -> models.BuildDatasetResponse:
        seeds_file = _require_file(request.seeds_path, "seed file")
        seeds = corpus.read_seed_file(seeds_file)
        backend = make_backend(request.backend.to_descriptor())

        instances: list[corpus.DataInstance] = []
        failures: list[corpus.BuildFailure] = []
        for seed in seeds:
            rng = builder.instance_rng(request.master_seed, seed.id)
            try:
                instances.append(
                    builder.build_instance(
                        seed, backend, rng, master_seed=request.master_seed
                    )
                )
            except builder.BuildStageError as exc:
                failures.append(
                    corpus.BuildFailure(
                        seed_id=seed.id, stage=exc.stage, error=str(exc.cause)
                    )
                )

        corpus.write_instances(request.out_path, instances)
        failures_path = request.failures_path or str(
            Path(request.out_path).with_suffix(".failures.jsonl")
        )
        corpus.write_failures(failures_path, failures)

        histogram: dict[int, int] = {}
        for instance in instances:
            histogram[instance.meta.num_events] = (
                histogram.get(instance.meta.num_events, 0) + 1
            )
        return models.BuildDatasetResponse(
            num_seeds=len(seeds),
            num_instances=len(instances),
            num_failures=len(failures),
            lie_counts={level: len(instances) for level in DIFFICULTIES},
            event_count_histogram=dict(sorted(histogram.items())),
            out_path=str(request.out_path),
            failures_path=failures_path,
        )

    @app.post("/evaluate", response_model=models.EvaluateResponse)
    def evaluate(request: models.EvaluateRequest) -> models.EvaluateResponse:
        dataset_file = _require_file(request.dataset_path, "dataset")
        if request.evaluator not in harness.EVALUATOR_NAMES:
            raise UsageProblem(
                f"unknown evaluator {request.evaluator!r}; "
                f"valid evaluators: {', '.join(harness.EVALUATOR_NAMES)}"
            )
        dataset = corpus.read_instances(dataset_file)
        if not dataset:
            raise UsageProblem(f"dataset is empty: {request.dataset_path}")
        backend = (
            make_backend(request.backend.to_descriptor()) if request.backend else None
        )
        try:
            evaluator = harness.make_evaluator(
                request.evaluator,
                dataset,
                backend=backend,
                two_call_sorter=request.two_call_sorter,
            )
        except ValueError as exc:
            raise UsageProblem(str(exc)) from exc
        run = harness.evaluate_benchmark(
            dataset, evaluator, include_paraphrases=request.include_paraphrases
        )

        out_path = request.out_path
        if out_path:
            Path(out_path).write_text(
                run.report.model_dump_json(indent=2) + "\n", encoding="utf-8"
            )
        scores_path = request.scores_path
        if scores_path:
            lines = [pair.model_dump_json() for pair in run.pairs]
            Path(scores_path).write_text(
                "".join(line + "\n" for line in lines), encoding="utf-8"
            )
        excluded = {row.instance_id for row in run.exclusions}
        return models.EvaluateResponse(
            report=run.report,
            num_excluded_instances=len(excluded),
            exclusions=run.exclusions,
            out_path=out_path,
            scores_path=scores_path,
        )

    @app.post("/report", response_model=models.ReportResponse)
    def report(request: models.ReportRequest) -> models.ReportResponse:
        scores_file = _require_file(request.scores_path, "scores file")
        pairs = []
        for line_no, line in enumerate(
            scores_file.read_text(encoding="utf-8").splitlines(), start=1
        ):
            if not line.strip():
                continue
            try:
                pairs.append(harness.ScoredPair.model_validate(json.loads(line)))
            except (json.JSONDecodeError, ValueError) as exc:
                raise UsageProblem(f"bad scores line {line_no}: {exc}") from exc
        if not pairs:
            raise UsageProblem(f"scores file is empty: {request.scores_path}")
        aggregated = harness.reaggregate_pairs(pairs, request.evaluator_name)
        out_path = request.out_path
        if out_path:
            Path(out_path).write_text(
                aggregated.model_dump_json(indent=2) + "\n", encoding="utf-8"
            )
        return models.ReportResponse(report=aggregated, out_path=out_path)

    return app


app = create_app()
