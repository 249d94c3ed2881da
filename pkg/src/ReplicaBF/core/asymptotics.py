"""一致性性质的蒙特卡洛验证

对每个样本量 n，重复实验估计量 θ̂_r ~ N(θ*, σ²/n)；原始研究固定不变。
第 i 个样本量的全部重复由种子流 SeedSequence(seed, spawn_key=(i,)) 生成，
因此结果与计算顺序无关。
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, model_validator

import numpy as np
import pandas as pd

from ReplicaBF.core.bayes_factors import log_bf_replication, log_bf_skeptical_vs_advocate
from ReplicaBF.core.kernel import DomainError, normal_pdf
from ReplicaBF.models.config import InformativeEnum
from ReplicaBF.models.study import ConsistencyScenario, MixtureHyperparams, StudyPair


class ScenarioKind(InformativeEnum):
    BFR = ("bfr", "BF_R 一致性", "θ*=0 时以 √n 速率发散，θ*≠0 时以 exp(−Kn) 速率趋于 0")
    BFSA = ("bfsa", "BF_{S:A} 极限", "收敛到密度比 p_S(θ*)/p_A(θ*)")
    MIXTURE = ("mixture", "BF_{SM:A} 一致性", "ψ>0 时 θ*=0 下发散，θ*≠0 下收敛到 (1−ψ)p_S/p_A")
    INFORMATION = ("information", "BF_R 信息一致性", "固定样本量下 |z_r| 增大时 BF_R → 0")


@dataclass(frozen=True)
class RateReport:
    n_values: list[int]
    mean_log_bf: list[float]
    fitted_slope: float
    target_description: str
    rates: list[float] = field(default_factory=list)
    mean_bf: list[float] = field(default_factory=list)
    se_bf: list[float] = field(default_factory=list)
    limit: float | None = None

    def __post_init__(self):
        lengths = {len(self.n_values), len(self.mean_log_bf), len(self.rates), len(self.mean_bf), len(self.se_bf)}
        if len(lengths) != 1:
            raise ValueError("RateReport 各列长度必须一致")

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(
            {
                "n": self.n_values,
                "mean_log_bf": self.mean_log_bf,
                "rate": self.rates,
                "mean_bf": self.mean_bf,
                "se_bf": self.se_bf,
            }
        )
        frame["fitted_slope"] = self.fitted_slope
        frame["limit"] = self.limit if self.limit is not None else math.nan
        return frame


# ── 抽样与汇总 ───────────────────────────────────────────────────────


def _replication_estimates(scn: ConsistencyScenario, index: int, n: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence(scn.seed, spawn_key=(index,)))
    return scn.theta_star + scn.sigma_unit / math.sqrt(n) * rng.standard_normal(scn.replications)


def _ratios(scn: ConsistencyScenario, original: StudyPair, theta_r: np.ndarray, n: int) -> tuple[float, np.ndarray]:
    sigma_r = scn.sigma_unit / math.sqrt(n)
    return original.sigma_o**2 / sigma_r**2, theta_r / original.theta_o


def _summarize(
    n_values: list[int], log_bfs: list[np.ndarray], description: str, limit: float | None = None
) -> RateReport:
    mean_log = [float(np.mean(values)) for values in log_bfs]
    bfs = [np.exp(values) for values in log_bfs]
    mean_bf = [float(np.mean(values)) for values in bfs]
    se_bf = [float(np.std(values, ddof=1) / math.sqrt(values.size)) if values.size > 1 else math.nan for values in bfs]
    if len(n_values) >= 2:
        slope = float(np.polyfit(0.5 * np.log(n_values), mean_log, 1)[0])
    else:
        slope = math.nan
    return RateReport(
        n_values=list(n_values),
        mean_log_bf=mean_log,
        fitted_slope=slope,
        target_description=description,
        rates=[m / n for m, n in zip(mean_log, n_values, strict=True)],
        mean_bf=mean_bf,
        se_bf=se_bf,
        limit=limit,
    )


def _density_ratio(theta: float, original: StudyPair, h: float) -> float:
    """p_S(θ; h) / p_A(θ)，p_S = N(0, hσ_o²)，p_A = N(θ̂_o, σ_o²)"""
    var_o = original.sigma_o**2
    return float(normal_pdf(theta, 0.0, h * var_o) / normal_pdf(theta, original.theta_o, var_o))


# ── 模拟 ─────────────────────────────────────────────────────────────


def simulate_bfr_consistency(scn: ConsistencyScenario, original: StudyPair | None = None) -> RateReport:
    """BF_R 随重复实验样本量增大的行为"""
    original = original or scn.original_study()
    log_bfs = []
    for index, n in enumerate(scn.n_schedule):
        c, d = _ratios(scn, original, _replication_estimates(scn, index, n), n)
        log_bfs.append(log_bf_replication(original.z_o, c, d))

    if scn.theta_star == 0:
        description = "θ*=0：mean log BF_R 对 log √n 的斜率约为 1"
    else:
        description = "θ*≠0：mean log BF_R / n 收敛到负常数"
    report = _summarize(scn.n_schedule, log_bfs, description)
    logger.debug(f"BF_R 模拟完成: 斜率 {report.fitted_slope:.4f}")
    return report


def simulate_bfsa_limit(scn: ConsistencyScenario, g: float, original: StudyPair) -> RateReport:
    """BF_{S:A} 的概率极限为 p_S(θ*)/p_A(θ*)"""
    if g <= 0:
        raise DomainError(f"相对方差 g 必须为正，收到 {g}")
    log_bfs = []
    for index, n in enumerate(scn.n_schedule):
        c, d = _ratios(scn, original, _replication_estimates(scn, index, n), n)
        log_bfs.append(log_bf_skeptical_vs_advocate(original.z_o, c, d, g))
    return _summarize(
        scn.n_schedule,
        log_bfs,
        f"BF_S:A → p_S(θ*)/p_A(θ*)，g={g:g}",
        limit=_density_ratio(scn.theta_star, original, g),
    )


def simulate_mixture_consistency(
    scn: ConsistencyScenario, hp: MixtureHyperparams, original: StudyPair
) -> RateReport:
    """BF_{SM:A} = ψ·BF_R + (1−ψ)·BF_{S:A}(h) 的一致性"""
    if hp.psi == 0:
        raise DomainError("ψ=0 时混合先验退化为纯怀疑先验，请使用 simulate_bfsa_limit")

    with np.errstate(divide="ignore"):
        log_psi, log_slab = math.log(hp.psi), np.log1p(-hp.psi)
    log_bfs = []
    for index, n in enumerate(scn.n_schedule):
        c, d = _ratios(scn, original, _replication_estimates(scn, index, n), n)
        log_r = log_bf_replication(original.z_o, c, d)
        log_s = log_bf_skeptical_vs_advocate(original.z_o, c, d, hp.h)
        log_bfs.append(np.logaddexp(log_psi + log_r, log_slab + log_s))

    if scn.theta_star == 0:
        description = f"θ*=0, ψ={hp.psi:g}：mean log BF_SM:A 对 log √n 的斜率约为 1"
        limit = None
    else:
        description = f"θ*≠0：BF_SM:A → (1−ψ)·p_S(θ*; h)/p_A(θ*)，h={hp.h:g}"
        limit = (1 - hp.psi) * _density_ratio(scn.theta_star, original, hp.h)
    return _summarize(scn.n_schedule, log_bfs, description, limit=limit)


def check_information_consistency(study_template: StudyPair, z_r_schedule: list[float]) -> list[tuple[float, float]]:
    """固定 z_o 与 c，沿递增的 z_r 计算 BF_R"""
    if any(b <= a for a, b in zip(z_r_schedule, z_r_schedule[1:], strict=False)):
        raise DomainError("z_r 序列必须严格递增")
    z_o, c = study_template.z_o, study_template.c
    z_r = np.asarray(z_r_schedule, dtype=float)
    bf = np.exp(log_bf_replication(z_o, c, z_r / (z_o * math.sqrt(c))))
    return [(float(z), float(b)) for z, b in zip(z_r, bf, strict=True)]


# ── 场景文件 ─────────────────────────────────────────────────────────


class SimulationScenario(BaseModel):
    """模拟场景文件的内容"""

    model_config = ConfigDict(frozen=True)

    name: str = Field(min_length=1)
    kind: ScenarioKind
    scenario: ConsistencyScenario | None = None
    g: float | None = Field(default=None, gt=0)
    psi: float | None = Field(default=None, gt=0, le=1)
    h: float | None = Field(default=None, gt=0)
    z_o: float | None = None
    c: float | None = Field(default=None, gt=0)
    z_r_schedule: list[float] | None = None

    @model_validator(mode="after")
    def _check_kind_fields(self):
        required = {
            ScenarioKind.BFR: ("scenario",),
            ScenarioKind.BFSA: ("scenario", "g"),
            ScenarioKind.MIXTURE: ("scenario", "psi", "h"),
            ScenarioKind.INFORMATION: ("z_o", "c", "z_r_schedule"),
        }[self.kind]
        missing = [name for name in required if getattr(self, name) is None]
        if missing:
            raise ValueError(f"{self.kind.value} 场景缺少字段: {', '.join(missing)}")
        return self


def load_scenario(path: Path | str) -> SimulationScenario:
    path = Path(path)
    return SimulationScenario.model_validate_json(path.read_text(encoding="utf-8"))


def run_scenario(spec: SimulationScenario, seed: int | None = None) -> pd.DataFrame:
    """执行场景并返回结果表；seed 非空时覆盖文件中的种子"""
    logger.info(f"运行模拟场景 {spec.name} ({spec.kind.display_name})")
    if spec.kind is ScenarioKind.INFORMATION:
        assert spec.z_o is not None and spec.c is not None and spec.z_r_schedule is not None
        template = StudyPair.from_zstat(spec.z_o, spec.z_o, spec.c, label=spec.name)
        rows = check_information_consistency(template, spec.z_r_schedule)
        return pd.DataFrame(rows, columns=["z_r", "bf_r"])

    assert spec.scenario is not None
    scn = spec.scenario if seed is None else spec.scenario.model_copy(update={"seed": seed})
    original = scn.original_study()
    if spec.kind is ScenarioKind.BFR:
        report = simulate_bfr_consistency(scn, original)
    elif spec.kind is ScenarioKind.BFSA:
        assert spec.g is not None
        report = simulate_bfsa_limit(scn, spec.g, original)
    else:
        assert spec.psi is not None and spec.h is not None
        report = simulate_mixture_consistency(scn, MixtureHyperparams(psi=spec.psi, h=spec.h), original)
    return report.to_frame()
