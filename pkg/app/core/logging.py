import logging

from app.core.config import settings


def configure_logging(level: str | None = None, log_file: str | None = None) -> None:
    """Configure root logging for an entry point (API server or CLI)"""
    handlers: list[logging.Handler] = [logging.StreamHandler()]
    target = log_file if log_file is not None else settings.LOG_FILE
    if target:
        handlers.append(logging.FileHandler(target))

    logging.basicConfig(
        level=(level or settings.LOG_LEVEL).upper(),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=handlers,
        force=True,
    )

    # Suppress watchfiles logs
    logging.getLogger('watchfiles').setLevel(logging.WARNING)
