#!/usr/bin/env python3
"""
Conformal multi-symplectic experiment API
FastAPI service for queuing stochastic NLS experiments and reading their results
"""

import os
from datetime import datetime
from pathlib import Path
from typing import Dict

import uvicorn
from fastapi import FastAPI

from routes import experiments, runs
from services.config_service import DEFAULT_PROJECT_DIR, ConfigService
from services.run_service import RunService


class ExperimentAPI:
    def __init__(self, base_dir: Path = None):
        print("🚀 Initializing ExperimentAPI...")
        self.app = FastAPI(
            title="Conformal Multi-Symplectic Experiments API",
            description="API for running damped stochastic NLS experiments in background threads",
            version="1.0.0",
        )

        self.base_dir = Path(base_dir or os.getenv("PROJECT_DIR") or DEFAULT_PROJECT_DIR)
        self.config_service = ConfigService(self.base_dir)
        self.run_service = RunService(self.config_service)

        print("⚙️ Services initialized")
        self.setup_routes()
        print("✅ ExperimentAPI initialization complete")

    def setup_routes(self):
        """Setup API routes"""

        # Inject services into routers
        experiments.set_config_service(self.config_service)
        runs.set_run_service(self.run_service)

        @self.app.get("/", response_model=Dict[str, str])
        async def root():
            return {
                "message": "Conformal Multi-Symplectic Experiments API",
                "version": "1.0.0",
                "status": "running",
            }

        @self.app.get("/health", response_model=Dict[str, str])
        async def health_check():
            """API health check"""
            return {"status": "healthy", "timestamp": datetime.now().isoformat()}

        self.app.include_router(experiments.router)
        self.app.include_router(runs.router)

        print("✅ All routes registered")


# Create API instance
api = ExperimentAPI()
app = api.app

if __name__ == "__main__":
    uvicorn.run(app, host="0.0.0.0", port=8000)
