from .exception_handler import capture_handled_exception, init_logging

__all__ = [
    "init_logging",
    "capture_handled_exception",
]
