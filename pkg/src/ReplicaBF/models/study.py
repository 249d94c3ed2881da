"""研究摘要与先验超参数的值类型"""

from __future__ import annotations

import math
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ReplicaBF.models.config import InformativeEnum

C_TOLERANCE = 1e-12
D_TOLERANCE = 1e-9


class StudyMode(InformativeEnum):
    CORRELATION = ("correlation", "相关系数", "列: label, r_o, r_r, n_o, n_r")
    ZSTAT = ("zstat", "z 统计量", "列: label, z_o, z_r, c（或 n_o, n_r）")


class StudyPair(BaseModel):
    """一组原始/重复实验的摘要统计量

    c 与 d 冗余存储；未给出时由 z 值与标准误推出，给出时须与之一致。
    """

    model_config = ConfigDict(frozen=True)

    label: str = ""
    z_o: float
    z_r: float
    sigma_o: float = Field(gt=0)
    sigma_r: float = Field(gt=0)
    c: float = Field(default=0.0, description="方差比 σ_o²/σ_r²")
    d: float = Field(default=math.nan, description="相对效应 θ̂_r/θ̂_o")

    @model_validator(mode="before")
    @classmethod
    def _derive_ratios(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        data = dict(data)
        z_o, z_r = data.get("z_o"), data.get("z_r")
        sigma_o, sigma_r = data.get("sigma_o"), data.get("sigma_r")
        if None in (z_o, z_r, sigma_o, sigma_r):
            return data
        if not data.get("c"):
            data["c"] = float(sigma_o) ** 2 / float(sigma_r) ** 2
        d = data.get("d")
        if (d is None or (isinstance(d, float) and math.isnan(d))) and float(z_o) != 0 and data["c"] > 0:
            data["d"] = float(z_r) / (float(z_o) * math.sqrt(data["c"]))
        return data

    @model_validator(mode="after")
    def _check_consistency(self):
        if self.z_o == 0:
            raise ValueError("z_o 不能为 0：相对效应 d 无定义")
        if not all(math.isfinite(v) for v in (self.z_o, self.z_r, self.c, self.d)):
            raise ValueError("z_o、z_r、c、d 必须为有限数")
        expected_c = self.sigma_o**2 / self.sigma_r**2
        if abs(self.c - expected_c) > C_TOLERANCE * max(1.0, expected_c):
            raise ValueError(f"c={self.c} 与 σ_o²/σ_r²={expected_c} 不一致")
        if abs(self.d * self.z_o * math.sqrt(self.c) - self.z_r) > D_TOLERANCE * max(1.0, abs(self.z_r)):
            raise ValueError(f"d={self.d} 不满足 d·z_o·√c = z_r")
        return self

    @property
    def theta_o(self) -> float:
        return self.z_o * self.sigma_o

    @property
    def theta_r(self) -> float:
        return self.z_r * self.sigma_r

    @classmethod
    def from_zstat(cls, z_o: float, z_r: float, c: float, label: str = "") -> StudyPair:
        """由 z 值与方差比构造，约定 σ_r = 1"""
        if c <= 0:
            raise ValueError(f"方差比 c 必须为正，收到 {c}")
        return cls(label=label, z_o=z_o, z_r=z_r, sigma_o=math.sqrt(c), sigma_r=1.0, c=c)

    @classmethod
    def from_estimates(
        cls, theta_o: float, sigma_o: float, theta_r: float, sigma_r: float, label: str = ""
    ) -> StudyPair:
        return cls(label=label, z_o=theta_o / sigma_o, z_r=theta_r / sigma_r, sigma_o=sigma_o, sigma_r=sigma_r)


class MixtureHyperparams(BaseModel):
    """怀疑混合先验 ψδ₀ + (1−ψ)N(0, hσ_o²) 的一点 (ψ, h)"""

    model_config = ConfigDict(frozen=True)

    psi: float = Field(ge=0, le=1)
    h: float = Field(gt=0)


class RawStudyRecord(BaseModel):
    """CSV 中的一行原始记录"""

    model_config = ConfigDict(frozen=True)

    label: str = Field(min_length=1)
    mode: StudyMode
    r_o: float | None = Field(default=None, gt=-1, lt=1)
    r_r: float | None = Field(default=None, gt=-1, lt=1)
    n_o: int | None = Field(default=None, ge=4)
    n_r: int | None = Field(default=None, ge=4)
    z_o: float | None = None
    z_r: float | None = None
    c: float | None = Field(default=None, gt=0)

    @model_validator(mode="after")
    def _check_mode_fields(self):
        if self.mode is StudyMode.CORRELATION:
            missing = [name for name in ("r_o", "r_r", "n_o", "n_r") if getattr(self, name) is None]
            extra = [name for name in ("z_o", "z_r", "c") if getattr(self, name) is not None]
        else:
            missing = [name for name in ("z_o", "z_r") if getattr(self, name) is None]
            if self.c is None and (self.n_o is None or self.n_r is None):
                missing.append("c")
            extra = [name for name in ("r_o", "r_r") if getattr(self, name) is not None]
        if missing:
            raise ValueError(f"{self.mode.value} 模式缺少字段: {', '.join(missing)}")
        if extra:
            raise ValueError(f"{self.mode.value} 模式不应包含字段: {', '.join(extra)}")
        return self


class ConsistencyScenario(BaseModel):
    """重复实验样本量递增时的模拟设定"""

    model_config = ConfigDict(frozen=True)

    theta_star: float = Field(description="真实效应 θ*")
    sigma_unit: float = Field(default=1.0, gt=0, description="单位方差尺度 σ")
    n_schedule: list[int] = Field(min_length=1)
    replications: int = Field(default=500, ge=1)
    seed: int = 0
    original_z: float = Field(default=3.0, description="固定原始研究的 z 值")
    original_n: int = Field(default=10, ge=1, description="固定原始研究的样本量")

    @field_validator("n_schedule")
    @classmethod
    def _strictly_increasing(cls, value: list[int]) -> list[int]:
        if any(n <= 0 for n in value):
            raise ValueError("样本量必须为正整数")
        if any(b <= a for a, b in zip(value, value[1:], strict=False)):
            raise ValueError("n_schedule 必须严格递增")
        return value

    def original_study(self) -> StudyPair:
        """固定的原始研究；重复实验字段仅作占位"""
        sigma_o = self.sigma_unit / math.sqrt(self.original_n)
        return StudyPair(
            label="original",
            z_o=self.original_z,
            z_r=self.original_z,
            sigma_o=sigma_o,
            sigma_r=sigma_o,
        )
