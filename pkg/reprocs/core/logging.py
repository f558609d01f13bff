"""
Logging configuration module.

Configures stdlib logging through dictConfig and routes structlog events through the
same handler. Rendering happens once, in a structlog ProcessorFormatter, so structlog
events and plain stdlib records come out in one format.

Version: 1.0
"""

import logging
import logging.config
import socket
from typing import Any, Dict, List, Optional

import structlog  # structlog v23.1+

from reprocs.config.settings import get_settings

SERVICE_NAME = 'reprocs'


def add_service_context(logger: Any, method_name: str, event_dict: Dict[str, Any]) -> Dict[str, Any]:
    """Service and host fields for machine-readable run logs"""
    event_dict.setdefault('service', SERVICE_NAME)
    event_dict.setdefault('host', socket.gethostname())
    return event_dict


def shared_processors() -> List[Any]:
    """Processors applied to structlog events and to foreign stdlib records alike"""
    return [
        structlog.stdlib.add_logger_name,
        structlog.stdlib.add_log_level,
        structlog.processors.TimeStamper(fmt="iso"),
        structlog.processors.StackInfoRenderer(),
    ]


def get_log_config(level: str, use_json: bool) -> Dict[str, Any]:
    """Generate the dictConfig for the root logger"""
    foreign_pre_chain = shared_processors() + [structlog.stdlib.ExtraAdder()]
    formatters = {
        'console': {
            '()': structlog.stdlib.ProcessorFormatter,
            'processors': [
                structlog.stdlib.ProcessorFormatter.remove_processors_meta,
                structlog.dev.ConsoleRenderer(colors=False),
            ],
            'foreign_pre_chain': foreign_pre_chain,
        },
        'json': {
            '()': structlog.stdlib.ProcessorFormatter,
            'processors': [
                structlog.stdlib.ProcessorFormatter.remove_processors_meta,
                add_service_context,
                structlog.processors.format_exc_info,
                structlog.processors.JSONRenderer(default=str),
            ],
            'foreign_pre_chain': foreign_pre_chain,
        },
    }

    handlers = {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'json' if use_json else 'console',
            'level': level,
            'stream': 'ext://sys.stderr',
        },
    }

    loggers = {
        '': {
            'handlers': ['console'],
            'level': level,
            'propagate': True
        },
    }

    return {
        'version': 1,
        'disable_existing_loggers': False,
        'formatters': formatters,
        'handlers': handlers,
        'loggers': loggers,
    }


def setup_logging(level: Optional[str] = None, use_json: Optional[bool] = None) -> None:
    """
    Initialize stdlib logging and structlog for the process.

    Args:
        level: Log level name; defaults to the LOG_LEVEL setting
        use_json: Emit JSON lines; defaults to LOG_JSON or production environment
    """
    settings = get_settings()
    level = (level or settings.LOG_LEVEL).upper()
    if use_json is None:
        use_json = settings.LOG_JSON or settings.ENVIRONMENT == 'production'

    logging.config.dictConfig(get_log_config(level, use_json))

    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            *shared_processors(),
            structlog.stdlib.ProcessorFormatter.wrap_for_formatter,
        ],
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=True,
    )
    logging.getLogger(__name__).debug("Logging system initialized")


def log_error(
    logger: Any,
    error: Exception,
    message: str,
    context: Optional[Dict[str, Any]] = None
) -> None:
    """
    Log an error with context.

    Args:
        logger: structlog or stdlib logger
        error: The exception that occurred
        message: A descriptive message about the error
        context: Additional context to include in the log
    """
    error_context = {
        "error_type": type(error).__name__,
        "error_message": str(error),
        **(context or {})
    }
    if isinstance(logger, logging.Logger):
        logger.error(message, extra={"context": error_context})
    else:
        logger.error(message, **error_context)


__all__ = ['add_service_context', 'get_log_config', 'setup_logging', 'log_error']
