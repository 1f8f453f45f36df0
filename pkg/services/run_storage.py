"""Run storage service"""
from datetime import datetime
from typing import Dict

from models.experiment_models import RunStatus

# Global state for run tracking
runs: Dict[str, RunStatus] = {}
MAX_RUNS = 100  # Memory run limit
FINISHED = ("completed", "failed", "aborted")


class RunStorage:
    """In-memory store of experiment runs"""

    @staticmethod
    def get_runs() -> Dict[str, RunStatus]:
        return runs

    @staticmethod
    def get_run(run_id: str) -> RunStatus:
        return runs[run_id]

    @staticmethod
    def add_run(run: RunStatus):
        runs[run.run_id] = run

    @staticmethod
    def update_run(run_id: str, **kwargs):
        if run_id in runs:
            for key, value in kwargs.items():
                setattr(runs[run_id], key, value)

    @staticmethod
    def running_count() -> int:
        return len([r for r in runs.values() if r.status == "running"])

    @staticmethod
    def cleanup_old_runs(max_runs: int = MAX_RUNS):
        """Remove oldest finished runs when the limit is reached"""
        if len(runs) < max_runs:
            return
        finished = sorted(
            ((run_id, run) for run_id, run in runs.items() if run.status in FINISHED),
            key=lambda item: item[1].start_time or datetime.min,
        )
        to_remove = len(runs) - max_runs + 1
        for run_id, _ in finished[:to_remove]:
            del runs[run_id]
            print(f"🗑️ Removed old run: {run_id}")

    @staticmethod
    def manual_cleanup_runs(max_runs: int = MAX_RUNS):
        """Remove every finished run"""
        initial_count = len(runs)
        for run_id in [run_id for run_id, run in runs.items() if run.status in FINISHED]:
            del runs[run_id]
            print(f"🗑️ Manually removed run: {run_id}")
        return {
            "message": "Manual cleanup completed",
            "removed_runs": initial_count - len(runs),
            "remaining_runs": len(runs),
            "max_runs": max_runs,
        }
