"""逐研究的分析报告组装"""

from __future__ import annotations

from collections.abc import Iterator, Sequence
from concurrent.futures import ProcessPoolExecutor
from functools import partial

from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from ReplicaBF.core.bayes_factors import EvidenceLabel, bf_replication, classify_evidence
from ReplicaBF.core.kernel import DEFAULT_SOLVER, DomainError
from ReplicaBF.core.solver import (
    DEFAULT_SEARCH,
    MixtureStatus,
    solve_skeptical_bf,
    solve_skeptical_mixture_bf,
)
from ReplicaBF.models.config import SearchConfig, SolverConfig
from ReplicaBF.models.study import StudyPair


class MixtureEntry(BaseModel):
    """某一冲突水平 α 下的 BF_SM；bf_sm 为 None 表示不存在"""

    model_config = ConfigDict(frozen=True)

    alpha: float = Field(gt=0, lt=1)
    status: MixtureStatus
    bf_sm: float | None = None
    psi: float | None = None
    h: float | None = None
    p_realized: float | None = None
    evidence: EvidenceLabel | None = None
    binding: bool | None = None


class AnalysisReport(BaseModel):
    """一项研究的完整分析结果

    None 表示不存在（文本表格中显示为 "-"）。
    """

    model_config = ConfigDict(frozen=True)

    label: str
    z_o: float
    z_r: float
    c: float
    d: float
    bf_r: float
    bf_r_evidence: EvidenceLabel
    bf_s: float | None = None
    bf_s_evidence: EvidenceLabel | None = None
    g_s: float | None = None
    p_s: float | None = None
    mixtures: list[MixtureEntry] = Field(default_factory=list)
    binding: bool | None = None
    dual_root_residual: float | None = None

    @property
    def bf_s_exists(self) -> bool:
        return self.bf_s is not None

    def mixture_at(self, alpha: float) -> MixtureEntry:
        for entry in self.mixtures:
            if entry.alpha == alpha:
                return entry
        raise KeyError(f"报告中没有 α={alpha:g} 的结果")

    def to_jsonl(self) -> str:
        return self.model_dump_json()

    @classmethod
    def from_jsonl(cls, line: str) -> AnalysisReport:
        return cls.model_validate_json(line)


def _check_alphas(alphas: Sequence[float]) -> None:
    if not alphas:
        raise DomainError("至少需要一个冲突水平 α")
    for alpha in alphas:
        if not 0 < alpha < 1:
            raise DomainError(f"α 必须在 (0, 1) 内，收到 {alpha}")


def analyze_study(
    study: StudyPair,
    alphas: Sequence[float],
    h_max: float | None = None,
    cfg: SolverConfig = DEFAULT_SOLVER,
    search: SearchConfig = DEFAULT_SEARCH,
) -> AnalysisReport:
    """计算 BF_R、BF_S 以及每个 α 下的 BF_SM

    BF_S 与 BF_SM 报告下确界 γ 本身；落在可达边界上的解，其 BF_{S:A} 可能严格小于 γ。
    """
    _check_alphas(alphas)
    logger.debug(f"分析 {study.label or '研究'}: z_o={study.z_o:g}, z_r={study.z_r:g}, c={study.c:.4g}")

    bf_r = bf_replication(study)
    skeptical = solve_skeptical_bf(study, cfg, search)

    mixtures = []
    for alpha in alphas:
        mix = solve_skeptical_mixture_bf(study, alpha, h_max, cfg, search)
        if mix is None:
            mixtures.append(MixtureEntry(alpha=alpha, status=MixtureStatus.NOT_ATTAINABLE))
            continue
        assert mix.hyperparams is not None
        mixtures.append(
            MixtureEntry(
                alpha=alpha,
                status=mix.status,
                bf_sm=mix.gamma,
                psi=mix.hyperparams.psi,
                h=mix.hyperparams.h,
                p_realized=mix.p_realized,
                evidence=classify_evidence(mix.gamma).label,
                binding=mix.binding,
            )
        )

    fields = {}
    if skeptical is not None:
        fields = {
            "bf_s": skeptical.gamma,
            "bf_s_evidence": classify_evidence(skeptical.gamma).label,
            "g_s": skeptical.g_small,
            "p_s": skeptical.p_conflict,
            "binding": skeptical.binding,
            "dual_root_residual": skeptical.dual_root_residual,
        }

    return AnalysisReport(
        label=study.label,
        z_o=study.z_o,
        z_r=study.z_r,
        c=study.c,
        d=study.d,
        bf_r=bf_r,
        bf_r_evidence=classify_evidence(bf_r).label,
        mixtures=mixtures,
        **fields,
    )


def analyze_studies(
    studies: Sequence[StudyPair],
    alphas: Sequence[float],
    h_max: float | None = None,
    cfg: SolverConfig = DEFAULT_SOLVER,
    search: SearchConfig = DEFAULT_SEARCH,
    jobs: int = 1,
) -> Iterator[AnalysisReport]:
    """按输入顺序逐个产出报告；jobs > 1 时在进程池中并行计算"""
    _check_alphas(alphas)
    worker = partial(analyze_study, alphas=tuple(alphas), h_max=h_max, cfg=cfg, search=search)
    if jobs <= 1 or len(studies) <= 1:
        yield from map(worker, studies)
        return

    logger.info(f"使用 {min(jobs, len(studies))} 个进程分析 {len(studies)} 项研究")
    with ProcessPoolExecutor(max_workers=min(jobs, len(studies))) as ex:
        yield from ex.map(worker, studies)
