import logging
import sys
from logging.handlers import RotatingFileHandler
import os


def setup_logger(log_dir=None, level=logging.INFO):
    """
    Configure root logging for command-line runs.

    Args:
        log_dir: Directory for the rotating log file. Defaults to the LOG_PATH
            environment variable, then to a local 'logs' directory.
        level: Logging level for the root logger.

    Returns:
        logging.Logger: Logger for this module.
    """
    log_dir = log_dir or os.environ.get('LOG_PATH', 'logs')

    # Create logs directory if it doesn't exist
    if not os.path.exists(log_dir):
        os.makedirs(log_dir)

    log_file = os.path.join(log_dir, 'alignment.log')

    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[
            logging.StreamHandler(sys.stdout),
            RotatingFileHandler(
                log_file,
                maxBytes=1024 * 1024,  # 1MB
                backupCount=5
            )
        ],
        force=True
    )

    # numba's compiler chatter is only useful when debugging kernels
    logging.getLogger('numba').setLevel(logging.WARNING)

    logger = logging.getLogger(__name__)
    logger.info(f"Logging setup completed (file: {log_file})")

    return logger
