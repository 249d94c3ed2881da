import atexit
import sys
import traceback
from pathlib import Path
from typing import Any

import psutil
from loguru import logger

from ReplicaBF import __version__
from ReplicaBF.consts import IS_DEV

LOG_FORMAT = (
    "<green>{time:HH:mm:ss.SSS}</green> | "
    "<level>{level: <7}</level> | "
    "<cyan>{name}</cyan>@<cyan>{function}</cyan>:<cyan>{line}</cyan> - "
    "<level>{message}</level>"
)

# 日志树中单独成行的字段
_TREE_KEYS = {"source", "error", "message", "location", "rss_mb", "threads"}


def _error_location(exc_tb: Any) -> str:
    """最内层栈帧，形如 solver.py:312 in _scan_infimum"""
    frames = traceback.extract_tb(exc_tb)
    if not frames:
        return "未知位置"
    last = frames[-1]
    return f"{Path(last.filename).name}:{last.lineno} in {last.name}"


def _error_context(
    exc_type: type, exc_value: BaseException, exc_tb: Any, source: str, **details: Any
) -> dict[str, Any]:
    """错误上下文：来源、位置、调用方附带的字段（如输入文件、研究标签）与进程状态"""
    process = psutil.Process()
    context = {
        "source": source,
        "error": exc_type.__name__,
        "message": str(exc_value),
        "location": _error_location(exc_tb),
        "version": __version__,
        "rss_mb": round(process.memory_info().rss / 2**20, 1),
        "threads": process.num_threads(),
        "dev": IS_DEV,
    }
    context.update({key: value for key, value in details.items() if value is not None})
    return context


def _log_exception(
    exc_type: type, exc_value: BaseException, exc_tb: Any, context: dict[str, Any], handled: bool
) -> None:
    prefix = "已处理异常" if handled else "未捕获异常"
    extra = [f"├─{key}: {value}" for key, value in context.items() if key not in _TREE_KEYS]
    log_msg = "\n".join(
        [
            f"{prefix}:",
            f"├─来源: {context['source']}",
            f"├─异常: {context['error']}: {context['message']}",
            f"├─位置: {context['location']}",
            *extra,
            f"├─进程: 内存 {context['rss_mb']}MB，线程 {context['threads']}",
            "└─堆栈:",
        ]
    )

    # 已处理异常的堆栈只在调试级别输出
    if handled:
        logger.opt(exception=(exc_type, exc_value, exc_tb)).debug(log_msg)
    else:
        logger.opt(exception=(exc_type, exc_value, exc_tb)).error(log_msg)
    logger.complete()


def capture_handled_exception(error: BaseException, source: str = "unknown", **details: Any) -> dict[str, Any]:
    """记录命令层已处理的异常并返回其上下文；details 中为 None 的字段被忽略"""
    context = _error_context(type(error), error, error.__traceback__, source, **details)
    _log_exception(type(error), error, error.__traceback__, context, handled=True)
    return context


def handle_unhandled_exception(exc_type: type, exc_value: BaseException, exc_tb: Any, source: str) -> None:
    if issubclass(exc_type, KeyboardInterrupt):
        sys.__excepthook__(exc_type, exc_value, exc_tb)
        return
    _log_exception(exc_type, exc_value, exc_tb, _error_context(exc_type, exc_value, exc_tb, source), handled=False)


def init_logging(level: str | int = "INFO", log_file: Path | str | None = None) -> None:
    """初始化日志与全局异常处理

    日志只写入 stderr（以及可选的文件），stdout 留给结果输出。
    """
    logger.remove()
    if sys.stderr is not None:
        logger.add(
            sys.stderr,
            level=level,
            format=LOG_FORMAT,
            colorize=sys.stderr.isatty(),
            backtrace=True,
            diagnose=str(level).upper() in ("DEBUG", "TRACE"),
        )

    if log_file is not None:
        logger.add(
            log_file,
            level="DEBUG",
            format=LOG_FORMAT,
            encoding="utf-8",
            enqueue=True,
            backtrace=True,
            diagnose=True,
        )
        logger.debug(f"日志同时写入 {log_file}")

    atexit.register(logger.complete)
    sys.excepthook = lambda exc_type, exc_value, exc_tb: handle_unhandled_exception(
        exc_type,
        exc_value,
        exc_tb,
        source="python_global",
    )
