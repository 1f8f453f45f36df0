"""Experiment routes"""
from typing import List, Optional

from fastapi import APIRouter, Depends, HTTPException

from models.experiment_models import ExperimentInfo
from services.config_service import ConfigService
from utils.errors import ConfigError

router = APIRouter(prefix="/experiments", tags=["experiments"])

# Global config service instance (will be set by main app)
_config_service: Optional[ConfigService] = None


def set_config_service(config_service: ConfigService):
    """Set the config service instance"""
    global _config_service
    _config_service = config_service


def get_config_service() -> ConfigService:
    """Dependency to get config service"""
    if _config_service is None:
        raise HTTPException(status_code=500, detail="Config service not initialized")
    return _config_service


@router.get("", response_model=List[ExperimentInfo])
async def list_experiments(config_service: ConfigService = Depends(get_config_service)):
    """List experiment kinds with their preset values"""
    try:
        return config_service.list_experiments()
    except ConfigError as e:
        raise HTTPException(status_code=500, detail=str(e))
