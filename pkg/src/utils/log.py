"""
JSON-lines logging for the command-line tools
"""
import json
import logging
import sys


class JsonLineFormatter(logging.Formatter):
    """
    Render each record as one JSON object per line

    Structured values are passed through ``extra={"fields": {...}}`` and are
    merged into the top-level object next to ``event``, ``level`` and ``logger``.
    """

    def format(self, record):
        payload = {
            "event": record.getMessage(),
            "level": record.levelname.lower(),
            "logger": record.name,
        }
        fields = getattr(record, "fields", None)
        if isinstance(fields, dict):
            for key, value in fields.items():
                payload[key] = _jsonable(value)
        if record.exc_info:
            payload["exception"] = self.formatException(record.exc_info)
        return json.dumps(payload, sort_keys=False)


def _jsonable(value):
    if hasattr(value, "tolist"):
        return value.tolist()
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    return value


class _MaxLevelFilter(logging.Filter):
    def __init__(self, max_level):
        super().__init__()
        self.max_level = max_level

    def filter(self, record):
        return record.levelno <= self.max_level


def configure_logging(level="INFO", stream=None, error_stream=None):
    """
    Route package logs to stdout (JSON lines) and errors to stderr

    Args:
        level: minimum level name for the package logger
        stream: stream for records below ERROR (default sys.stdout)
        error_stream: stream for ERROR and above (default sys.stderr)

    Returns:
        The configured package logger
    """
    logger = logging.getLogger("src")
    logger.handlers.clear()
    logger.setLevel(level)
    logger.propagate = False

    formatter = JsonLineFormatter()

    out_handler = logging.StreamHandler(stream if stream is not None else sys.stdout)
    out_handler.setFormatter(formatter)
    out_handler.addFilter(_MaxLevelFilter(logging.WARNING))
    logger.addHandler(out_handler)

    err_handler = logging.StreamHandler(error_stream if error_stream is not None else sys.stderr)
    err_handler.setFormatter(formatter)
    err_handler.setLevel(logging.ERROR)
    logger.addHandler(err_handler)
    return logger


def log_fields(logger, event, level=logging.INFO, **fields):
    """Emit one structured record: ``log_fields(logger, "epoch", epoch=3, loss=0.4)``"""
    logger.log(level, event, extra={"fields": fields})
