"""应用配置存储
集中存放求解器容差、搜索网格、冲突网格与应用设置。
基于 pydantic，配置项支持类型验证，可从 JSON 文件加载，并由命令行参数覆盖。
"""

from __future__ import annotations

import json
from enum import Enum
from pathlib import Path
from typing import Any

from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, model_validator


class InformativeEnum(Enum):
    """带显示名称的枚举类"""

    def __init__(self, value, display_name, description=None):
        self.display_name: str = display_name
        self.description: str | None = description
        self._value_ = value

    @classmethod
    def from_value(cls, value: Any):
        for member in cls:
            if member.value == value:
                return member
        raise ValueError(f"{cls.__name__} 不包含取值 {value!r}")


class LogLevelEnum(InformativeEnum):
    TRACE = (5, "追踪")
    DEBUG = (10, "调试")
    INFO = (20, "信息")
    WARNING = (30, "警告")
    ERROR = (40, "错误")
    CRITICAL = (50, "灾难")


class OutputFormat(InformativeEnum):
    TEXT = ("text", "文本表格", "按汇总表的舍入规则排版")
    JSONL = ("jsonl", "JSON Lines", "每行一个报告，可无损回读")
    CSV = ("csv", "CSV", "列名稳定的逗号分隔表格")


class ConfigModel(BaseModel):
    """配置模型基类"""

    model_config = ConfigDict(validate_by_name=True, validate_assignment=True)

    def with_updates(self, **changes: Any):
        """返回应用了非 None 覆盖值的副本"""
        changes = {k: v for k, v in changes.items() if v is not None}
        if not changes:
            return self
        return self.__class__.model_validate(self.model_dump() | changes)


class SolverConfig(ConfigModel):
    """一维求根与极小化的容差"""

    model_config = ConfigDict(validate_by_name=True, frozen=True)

    abs_tol: float = Field(
        default=1e-10,
        gt=0,
        title="绝对容差",
        description="根或自变量的绝对容差",
    )
    rel_tol: float = Field(
        default=4.5e-16,
        ge=0,
        title="相对容差",
    )
    max_iter: int = Field(
        default=200,
        ge=1,
        title="最大迭代次数",
    )


class SearchConfig(ConfigModel):
    """γ 下确界扫描与混合先验方差搜索"""

    model_config = ConfigDict(validate_by_name=True, frozen=True)

    gamma_grid: int = Field(
        default=400,
        ge=10,
        title="γ 网格点数",
        description="在 (γ_min, 1) 上对数均匀扫描的点数",
    )
    h_grid: int = Field(
        default=200,
        ge=10,
        title="h 网格点数",
        description="沿 U_γ 搜索 P=α 交点时的对数网格点数",
    )
    h_max: float = Field(
        default=100.0,
        gt=0,
        title="h 上限",
        description="混合先验相对方差的搜索上限，超出视为模糊而非怀疑",
    )
    g_lower: float = Field(
        default=1e-8,
        gt=0,
        title="γ_min 搜索下界",
    )
    g_upper: float = Field(
        default=1e8,
        gt=0,
        title="γ_min 搜索上界",
    )

    @model_validator(mode="after")
    def _check_bounds(self):
        if self.g_lower >= self.g_upper:
            raise ValueError("g_lower 必须小于 g_upper")
        return self


class ConflictConfig(ConfigModel):
    """先验-数据冲突等高线网格"""

    resolution: int = Field(
        default=200,
        ge=2,
        title="网格分辨率",
    )
    h_lo: float = Field(default=1e-3, gt=0, title="h 下界")
    h_hi: float = Field(default=20.0, gt=0, title="h 上界")
    psi_lo: float = Field(default=0.0, ge=0, le=1, title="ψ 下界")
    psi_hi: float = Field(default=1.0, ge=0, le=1, title="ψ 上界")
    trace_points: int = Field(
        default=400,
        ge=2,
        title="U_γ 采样点数",
    )


class AppConfig(ConfigModel):
    log_level: LogLevelEnum = Field(
        default=LogLevelEnum.INFO,
        title="日志级别",
    )
    log_file: Path | None = Field(
        default=None,
        title="日志文件",
        description="设置后，日志同时写入该文件",
    )
    jobs: int = Field(
        default=1,
        ge=1,
        le=64,
        title="并行进程数",
        description="逐研究分析时使用的进程数，输出顺序始终与输入一致",
    )


class Config(ConfigModel):
    Solver: SolverConfig = Field(default_factory=SolverConfig, title="求解器")
    Search: SearchConfig = Field(default_factory=SearchConfig, title="搜索")
    Conflict: ConflictConfig = Field(default_factory=ConflictConfig, title="冲突网格")
    App: AppConfig = Field(default_factory=AppConfig, title="应用")


def load_config(path: Path | str | None = None) -> Config:
    """加载配置文件；未指定路径时返回默认配置"""
    if path is None:
        return Config()

    path = Path(path)
    data = json.loads(path.read_text(encoding="utf-8"))
    loaded = Config.model_validate(data)
    logger.debug(f"已从 {path} 加载配置")
    return loaded

