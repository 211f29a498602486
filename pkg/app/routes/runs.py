from pathlib import Path

from fastapi import APIRouter

from app.models.api import MemoryResponse, MetricsResponse
from app.services import config
from app.services.reporting import RunPaths, memory_report, read_metrics
from app.utils.exceptions import NotFoundError
from app.utils.logger import logger

router = APIRouter(prefix="/api/runs", tags=["runs"])


def run_dir(run: str) -> Path:
    """Resolve a run name under the runs root, rejecting anything outside it"""
    root = Path(config.RUNS_ROOT).resolve()
    path = (root / run).resolve()
    if path.parent != root or not path.is_dir():
        raise NotFoundError(resource=f"Run '{run}'")
    return path


@router.get("/{run}/metrics", response_model=MetricsResponse)
def get_metrics(run: str):
    """
    Per-batch rows of metrics.csv
    """
    rows = read_metrics(RunPaths(run_dir(run)).metrics)
    logger.info(f"Metrics requested for run {run}")
    return MetricsResponse(run=run, rows=rows)


@router.get("/{run}/memory", response_model=MemoryResponse)
def get_memory(run: str):
    """
    Checkpoint sizes per component after each batch
    """
    report = memory_report(run_dir(run))
    return MemoryResponse(
        run=run,
        batches=report.batches,
        decoder_constant=report.decoder_constant,
        generative_bytes=report.generative_bytes,
    )
