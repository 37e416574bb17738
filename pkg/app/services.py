from typing import Any, Dict, Optional
import logging
import math

from .config import ConfigError, SimulationConfig
from .isac import IsacConfig, NoSignalDetected, range_once
from .simulation import run

logger = logging.getLogger(__name__)


class SimulationService:
    """Runs single simulations for the web layer and stores them as SimulationRun rows"""

    def __init__(self, db):
        self.db = db

    def build_config(self, payload: Optional[Dict[str, Any]]) -> Dict[str, Any]:
        """
        Validate a JSON body of SimulationConfig keys.

        Returns {'status': 'ok', 'config': SimulationConfig} or
        {'status': 'error', 'error': ..., 'key': ...}.
        """
        if payload is not None and not isinstance(payload, dict):
            return {'status': 'error', 'error': 'Request body must be a JSON object', 'key': None}
        try:
            return {'status': 'ok', 'config': SimulationConfig.from_mapping(payload or {})}
        except ConfigError as e:
            return {'status': 'error', 'error': str(e), 'key': e.key}

    def simulate(self, cfg: SimulationConfig) -> Dict[str, Any]:
        """Run one simulation and persist it; errors are stored on the run and reported"""
        from .models import SimulationRun

        record = SimulationRun(scheduler=cfg.scheduler, node_count=cfg.node_count, mcv_count=cfg.mcv_count,
                               seed=cfg.seed, horizon=cfg.horizon, isac=cfg.isac, config=cfg.to_dict())
        self.db.session.add(record)
        try:
            report, log = run(cfg)
            record.energy_usage_efficiency = report.energy_usage_efficiency
            record.efficiency_defined = report.efficiency_defined
            record.mean_charging_delay = report.mean_charging_delay
            record.survival_rate = report.survival_rate
            record.travel_distance_total = report.travel_distance_total
            record.requests_emitted = report.requests_emitted
            record.requests_served = report.requests_served
            record.duplicate_services = report.duplicate_services
            record.event_log = '\n'.join(log.to_lines())
            record.status = 'completed'
            self.db.session.commit()
            logger.info(f"Stored simulation run {record.id}")
            return {'status': 'completed', 'run': record.to_dict()}
        except Exception as e:
            logger.error(f"Simulation failed: {e}")
            record.status = 'error'
            record.error_message = str(e)
            self.db.session.commit()
            return {'status': 'error', 'error': str(e), 'run': record.to_dict()}


class RangingService:
    """Single ISAC ranging exchanges on demand"""

    def __init__(self, cfg: IsacConfig = IsacConfig(), sensing_range: float = 25.0):
        self.cfg = cfg
        self.sensing_range = sensing_range

    def range(self, distance: Any, snr_db: Any = None, noise_seed: Any = None) -> Dict[str, Any]:
        try:
            distance = float(distance)
            if not math.isfinite(distance) or distance < 0:
                raise ValueError(f"distance must be a non-negative number, got {distance}")
            cfg = self.cfg
            if snr_db is not None:
                cfg = IsacConfig(cfg.sample_rate, cfg.duration, cfg.f0, cfg.f1, float(snr_db))
            seed = int(noise_seed) if noise_seed is not None else None
            result = range_once(distance, self.sensing_range, cfg, noise_seed=seed)
            return {'status': 'ok', 'distance': distance, 'snr_db': cfg.snr_db, **result.to_dict()}
        except NoSignalDetected as e:
            return {'status': 'error', 'error': str(e)}
        except (TypeError, ValueError) as e:
            return {'status': 'error', 'error': str(e)}
