"""Run routes"""
from datetime import datetime
from typing import Any, Dict, List, Optional

from fastapi import APIRouter, BackgroundTasks, Depends, HTTPException

from models.experiment_models import RunRequest, RunResponse, RunStatus
from services.run_service import RunService
from services.run_storage import RunStorage
from utils.errors import ConfigError

router = APIRouter(prefix="/runs", tags=["runs"])

# Global service instance (will be set by main app)
_run_service: Optional[RunService] = None


def set_run_service(run_service: RunService):
    """Set the run service instance"""
    global _run_service
    _run_service = run_service


def get_run_service() -> RunService:
    """Dependency to get run service"""
    if _run_service is None:
        raise HTTPException(status_code=500, detail="Run service not initialized")
    return _run_service


def get_run_storage() -> RunStorage:
    """Dependency to get run storage"""
    return RunStorage()


@router.post("", response_model=RunResponse)
async def start_run(
    request: RunRequest,
    background_tasks: BackgroundTasks,
    run_service: RunService = Depends(get_run_service),
):
    """Queue an experiment run"""
    print(f"🔍 Run requested: {request.experiment.value}")
    try:
        run_id, cfg = run_service.queue_run(request.experiment, request.overrides, request.full_scale)
    except ConfigError as e:
        raise HTTPException(status_code=400, detail=str(e))

    background_tasks.add_task(run_service.execute_run, run_id, cfg)
    return RunResponse(
        run_id=run_id,
        experiment=request.experiment,
        status="queued",
        message=f"Experiment '{request.experiment.value}' queued",
        timestamp=datetime.now(),
    )


@router.get("", response_model=List[RunStatus])
async def list_runs(storage: RunStorage = Depends(get_run_storage)):
    """List all runs"""
    return list(storage.get_runs().values())


@router.delete("/cleanup", response_model=Dict[str, Any])
async def cleanup_runs(storage: RunStorage = Depends(get_run_storage)):
    """Remove every finished run"""
    return storage.manual_cleanup_runs()


@router.get("/{run_id}", response_model=RunStatus)
async def get_run_status(run_id: str, storage: RunStorage = Depends(get_run_storage)):
    """Get run status, summary and written files"""
    runs = storage.get_runs()
    if run_id not in runs:
        raise HTTPException(status_code=404, detail="Run not found")
    return runs[run_id]
