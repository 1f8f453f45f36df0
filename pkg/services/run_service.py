"""Run service: experiments executed in background threads"""
import asyncio
import uuid
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from models.experiment_models import ExperimentConfig, ExperimentKind, RunStatus
from services.config_service import ConfigService
from services.experiments import run_experiment
from services.run_storage import RunStorage
from utils.errors import ConfigError, ExperimentAborted, ScmsError


class RunService:
    """Queues experiments and tracks their status"""

    def __init__(self, config_service: ConfigService):
        self.config_service = config_service
        self.storage = RunStorage()

    def queue_run(
        self, kind: ExperimentKind, overrides: Optional[Dict[str, Any]] = None, full_scale: bool = False
    ) -> Tuple[str, ExperimentConfig]:
        """Validate the configuration and register a queued run; raises ConfigError"""
        if "out_dir" in (overrides or {}):
            raise ConfigError("out_dir cannot be set through the API, runs write under settings.output_dir")
        cfg = self.config_service.build_experiment_config(kind, overrides=overrides, full_scale=full_scale)
        settings = self.config_service.get_settings()
        run_id = str(uuid.uuid4())
        out_dir = Path(settings.get("output_dir", "results")) / cfg.experiment.value / run_id
        cfg = cfg.model_copy(update={"out_dir": str(out_dir)})
        self.storage.cleanup_old_runs(settings.get("max_runs", 100))
        self.storage.add_run(RunStatus(run_id=run_id, experiment=cfg.experiment, status="queued"))
        print(f"🆔 Queued run {run_id} ({cfg.experiment.value})")
        return run_id, cfg

    async def execute_run(self, run_id: str, cfg: ExperimentConfig):
        """Run one experiment to completion and record the outcome"""
        max_concurrent = self.config_service.get_settings().get("max_concurrent_runs", 2)
        if self.storage.running_count() >= max_concurrent:
            self.storage.update_run(
                run_id,
                status="failed",
                end_time=datetime.now(),
                error=f"Maximum concurrent runs ({max_concurrent}) reached. Please wait for some runs to complete.",
            )
            print(f"❌ Run {run_id} rejected: {max_concurrent} runs already active")
            return

        self.storage.update_run(run_id, status="running", start_time=datetime.now())
        print(f"🚀 Starting run {run_id} ({cfg.experiment.value})")
        try:
            outcome = await asyncio.to_thread(run_experiment, cfg)
        except ExperimentAborted as e:
            self.storage.update_run(run_id, status="aborted", end_time=datetime.now(), error=str(e))
            print(f"❌ Run {run_id} aborted: {e}")
        except ScmsError as e:
            self.storage.update_run(run_id, status="failed", end_time=datetime.now(), error=str(e))
            print(f"❌ Run {run_id} failed: {e}")
        except Exception as e:
            self.storage.update_run(
                run_id, status="failed", end_time=datetime.now(), error=f"Unexpected error: {e}"
            )
            print(f"❌ Run {run_id} crashed: {e}")
        else:
            self.storage.update_run(
                run_id,
                status="completed",
                end_time=datetime.now(),
                summary=outcome.summary,
                files=outcome.files,
            )
            print(f"✅ Run {run_id} completed")
