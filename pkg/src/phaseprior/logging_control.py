from __future__ import annotations

import logging
import sys
import threading
from dataclasses import dataclass
from logging.handlers import RotatingFileHandler
from pathlib import Path

from .errors import ConfigError

# Supported log levels and defaults
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")
DEFAULT_LEVEL = "WARNING"
LOG_FORMAT = "%(asctime)s %(levelname)s [%(name)s] %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"

# Package loggers that follow the configured level
WATCHED_LOGGERS = ("phaseprior",)
# Third-party loggers pinned at WARNING regardless of the configured level
QUIET_LOGGERS = ("matplotlib", "PIL")


@dataclass
class LogSettings:
    """Log configuration for one process."""

    level: str = DEFAULT_LEVEL
    log_file: Path | None = None
    max_bytes: int = 5 * 1024 * 1024
    backup_count: int = 3


class LogManager:
    """Centralized logging configurator for the command line and scripts."""

    def __init__(self, settings: LogSettings | None = None) -> None:
        self._lock = threading.Lock()
        self.settings = settings or LogSettings()
        self.settings.level = self._validate_level(self.settings.level)
        self._stream_handler: logging.StreamHandler | None = None
        self._file_handler: RotatingFileHandler | None = None

    def configure_logging(self) -> None:
        """Install the handlers once and apply the configured level."""
        with self._lock:
            root_logger = logging.getLogger()
            formatter = logging.Formatter(fmt=LOG_FORMAT, datefmt=DATE_FORMAT)
            level_value = self._resolve_level(self.settings.level)

            if self._stream_handler is None:
                self._stream_handler = logging.StreamHandler(sys.stderr)
                self._stream_handler.setFormatter(formatter)
                root_logger.addHandler(self._stream_handler)
            self._stream_handler.setLevel(level_value)

            if self.settings.log_file is not None:
                handler = self._ensure_rotating_handler(root_logger, formatter)
                handler.setLevel(level_value)

            root_logger.setLevel(min(level_value, logging.WARNING))
            for name in WATCHED_LOGGERS:
                component_logger = logging.getLogger(name)
                component_logger.setLevel(level_value)
                component_logger.propagate = True
            for name in QUIET_LOGGERS:
                logging.getLogger(name).setLevel(logging.WARNING)

    def shutdown(self) -> None:
        """Detach and close the handlers installed by this manager."""
        with self._lock:
            root_logger = logging.getLogger()
            for handler in (self._stream_handler, self._file_handler):
                if handler is not None:
                    root_logger.removeHandler(handler)
                    handler.close()
            self._stream_handler = None
            self._file_handler = None

    # --- Internal helpers -------------------------------------------------
    def _resolve_level(self, level: str) -> int:
        return getattr(logging, self._validate_level(level), logging.WARNING)

    def _validate_level(self, level: str) -> str:
        upper = level.upper()
        if upper not in LOG_LEVELS:
            raise ConfigError(f"Unsupported log level: {level}")
        return upper

    def _ensure_rotating_handler(self, root_logger: logging.Logger, formatter: logging.Formatter) -> RotatingFileHandler:
        assert self.settings.log_file is not None
        target = self.settings.log_file
        if self._file_handler is not None and Path(self._file_handler.baseFilename) == target.resolve():
            return self._file_handler
        if self._file_handler is not None:
            root_logger.removeHandler(self._file_handler)
            self._file_handler.close()
        target.parent.mkdir(parents=True, exist_ok=True)
        handler = RotatingFileHandler(target, maxBytes=self.settings.max_bytes, backupCount=self.settings.backup_count)
        handler.setFormatter(formatter)
        root_logger.addHandler(handler)
        self._file_handler = handler
        return handler


_LOG_MANAGER: LogManager | None = None


def get_log_manager(settings: LogSettings | None = None) -> LogManager:
    """Singleton accessor for the process-wide log manager."""
    global _LOG_MANAGER
    if _LOG_MANAGER is None:
        _LOG_MANAGER = LogManager(settings)
    elif settings is not None:
        _LOG_MANAGER.settings = settings
        _LOG_MANAGER.settings.level = _LOG_MANAGER._validate_level(settings.level)
    return _LOG_MANAGER
