"""ReplicaBF - 重复实验的怀疑型贝叶斯因子分析工具"""

__version__ = "0.3.0"
__author__ = "ReplicaBF contributors"

from .consts import IS_DEV

if IS_DEV:
    from loguru import logger

    logger.debug(f"ReplicaBF v{__version__} (development checkout)")
