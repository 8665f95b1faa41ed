"""
Logging configuration and utilities.
"""

import logging
import logging.handlers
import os
from typing import Optional

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
DATE_FORMAT = '%Y-%m-%d %H:%M:%S'


def setup_logging(log_level: str = "INFO", log_dir: Optional[str] = None,
                  log_to_file: bool = True, max_file_size: int = 10 * 1024 * 1024,
                  backup_count: int = 5) -> None:
    """
    Setup logging with a console handler and, when a directory is given, rotating files.

    Args:
        log_level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_dir: Directory for log files; no file logging when None
        log_to_file: Whether to log to file
        max_file_size: Maximum log file size in bytes before rotation
        backup_count: Number of backup log files to keep
    """
    root_logger = logging.getLogger()
    root_logger.setLevel(getattr(logging, log_level.upper(), logging.INFO))
    root_logger.handlers.clear()

    formatter = logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT)

    console_handler = logging.StreamHandler()
    console_handler.setLevel(getattr(logging, log_level.upper(), logging.INFO))
    console_handler.setFormatter(formatter)
    root_logger.addHandler(console_handler)

    if log_to_file and log_dir:
        try:
            os.makedirs(log_dir, exist_ok=True)

            file_handler = logging.handlers.RotatingFileHandler(
                os.path.join(log_dir, 'motionbench.log'),
                maxBytes=max_file_size,
                backupCount=backup_count,
                encoding='utf-8'
            )
            file_handler.setLevel(logging.DEBUG)
            file_handler.setFormatter(formatter)
            root_logger.addHandler(file_handler)

            error_handler = logging.handlers.RotatingFileHandler(
                os.path.join(log_dir, 'errors.log'),
                maxBytes=max_file_size,
                backupCount=backup_count,
                encoding='utf-8'
            )
            error_handler.setLevel(logging.ERROR)
            error_handler.setFormatter(formatter)
            root_logger.addHandler(error_handler)
        except OSError as e:
            root_logger.warning(f"File logging disabled, cannot use {log_dir}: {e}")

    logging.debug(f"Logging initialized (level {log_level}, directory {log_dir})")


def log_run_start(command: str, target: str, logger: Optional[logging.Logger] = None):
    """Log the start of a command run."""
    logger = logger or logging.getLogger(__name__)
    logger.info(f"[{command.upper()}] Starting: {target}")


def log_run_complete(command: str, target: str, outputs: int,
                     logger: Optional[logging.Logger] = None):
    """Log the completion of a command run."""
    logger = logger or logging.getLogger(__name__)
    logger.info(f"[{command.upper()}] Completed: {target} ({outputs} outputs)")


def log_epoch(epoch: int, train_loss: float, val_loss: float, val_mpjpe: float,
              logger: Optional[logging.Logger] = None):
    """Log one line per training epoch."""
    logger = logger or logging.getLogger(__name__)
    logger.info(f"Epoch {epoch}: train {train_loss:.3f} mm, val {val_loss:.3f} mm, "
                f"val MPJPE@1000 {val_mpjpe:.3f} mm")


def log_system_info(logger: Optional[logging.Logger] = None):
    """Log interpreter and numeric library versions for debugging."""
    logger = logger or logging.getLogger(__name__)
    try:
        import platform
        import sys

        import numpy
        import torch

        logger.info("System Information:")
        logger.info(f"  OS: {platform.system()} {platform.release()}")
        logger.info(f"  Python: {sys.version.split()[0]}")
        logger.info(f"  numpy: {numpy.__version__}, torch: {torch.__version__}")
        logger.info(f"  torch threads: {torch.get_num_threads()}")
    except Exception as e:
        logger.warning(f"Could not log system info: {e}")


def log_configuration(config: dict, logger: Optional[logging.Logger] = None):
    """
    Log the settings that identify a run.

    Args:
        config: Resolved configuration dictionary
        logger: Optional logger instance
    """
    logger = logger or logging.getLogger(__name__)

    safe_keys = ['seed', 'deterministic', 'output_dir', 'model', 'corpus_dir']
    logger.info("Current Configuration:")
    for key in safe_keys:
        if key in config:
            logger.info(f"  {key}: {config[key]}")
    for section in ('window', 'horizons'):
        if section in config:
            logger.info(f"  {section}: {config[section]}")
