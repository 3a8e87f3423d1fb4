import logging
import sys
from datetime import datetime
from typing import Dict, Any

import structlog

from ..config.config import Config


def configure_logging(level: str = None, fmt: str = None) -> None:
    """Route structlog through stdlib logging on stderr; stdout carries artifacts"""
    level = (level or Config.LOG_LEVEL).upper()
    fmt = (fmt or Config.LOG_FORMAT).lower()
    logging.basicConfig(stream=sys.stderr, format="%(message)s", level=level, force=True)
    renderer = (
        structlog.dev.ConsoleRenderer(colors=False)
        if fmt == "console"
        else structlog.processors.JSONRenderer(sort_keys=True)
    )
    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            structlog.stdlib.PositionalArgumentsFormatter(),
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            structlog.processors.UnicodeDecoder(),
            renderer,
        ],
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=True,
    )


configure_logging()

logger = structlog.get_logger("fpp")


class ExperimentLogger:
    def __init__(self, component: str = "experiment_engine"):
        self.logger = logger.bind(component=component)

    def log_job_start(self, run_id: str, job_id: str, kind: str, samples: int):
        self.logger.info(
            "job_started",
            run_id=run_id,
            job_id=job_id,
            kind=kind,
            samples=samples,
            timestamp=datetime.now().isoformat()
        )

    def log_job_end(self, run_id: str, job_id: str, status: str, duration_ms: float, result: Any = None):
        self.logger.info(
            "job_completed",
            run_id=run_id,
            job_id=job_id,
            status=status,
            duration_ms=duration_ms,
            result=result,
            timestamp=datetime.now().isoformat()
        )

    def log_chunk(self, job_id: str, start: int, stop: int, duration_ms: float):
        self.logger.debug("chunk_done", job_id=job_id, start=start, stop=stop, duration_ms=duration_ms)

    def log_error(self, run_id: str, job_id: str, error: str, context: Dict[str, Any] = None):
        try:
            log_data = {
                "run_id": run_id,
                "job_id": job_id,
                "error": error,
                "timestamp": datetime.now().isoformat()
            }
            if context:
                log_data.update(context)

            self.logger.error("job_error", **log_data)
        except Exception as e:
            # Logging must never take the run down with it
            print(f"ERROR LOGGING FAILED: {str(e)}", file=sys.stderr)

    def log_run_status(self, run_id: str, status: str, context: Dict[str, Any] = None):
        log_data = {"run_id": run_id, "status": status, "timestamp": datetime.now().isoformat()}
        if context:
            log_data.update(context)
        self.logger.info("run_status", **log_data)

    def log_policy_event(self, run_id: str, event_type: str, details: Dict[str, Any]):
        self.logger.info("policy_event", run_id=run_id, event_type=event_type, details=details)

    def log_invariant_event(self, check: str, passed: bool, details: Dict[str, Any] = None):
        emit = self.logger.info if passed else self.logger.error
        emit("invariant_check", check=check, passed=passed, **(details or {}))

    def log_warning(self, event: str, **details):
        self.logger.warning(event, **details)
