"""ReplicaBF 命令行 —— 重复实验的怀疑型贝叶斯因子分析。

用法::

    replica-bf analyze --input studies.csv --alpha 0.01 --alpha 0.1
    replica-bf analyze --zstat 3 2.5 1 --alpha 0.1
    replica-bf table [--format jsonl]
    replica-bf curves --zstat 3 2.5 1 --alpha 0.1 --output curves.csv
    replica-bf contours --z-o 3 --gamma 0.16 --output-dir out/
    replica-bf bf-vs-alpha --scenario-grid
    replica-bf simulate prop1-null --seed 7

退出码: 0 成功；1 输入错误；2 数值求解失败。
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Any

from loguru import logger
from pydantic import ValidationError

import numpy as np
import pandas as pd

from ReplicaBF import __version__
from ReplicaBF.consts import SCENARIO_DIR, SSRP_PATH, TABLE_ALPHAS
from ReplicaBF.core.asymptotics import load_scenario, run_scenario
from ReplicaBF.core.bayes_factors import bf_replication, log_bf_skeptical_vs_advocate, log_bf_zero_vs_skeptical
from ReplicaBF.core.conflict import conflict_grid
from ReplicaBF.core.kernel import Bracket, DomainError, SolverError
from ReplicaBF.core.runtime import capture_handled_exception, init_logging
from ReplicaBF.core.solver import (
    GammaNotAttainable,
    MixtureStatus,
    attainable_minimum,
    mixture_along_conflict,
    solve_skeptical_bf,
    solve_skeptical_mixture_bf,
    u_gamma_trace,
)
from ReplicaBF.models.config import Config, LogLevelEnum, OutputFormat, load_config
from ReplicaBF.models.study import StudyPair
from ReplicaBF.services.analysis import analyze_studies
from ReplicaBF.services.ingest import StudyValidationError, load_study_pairs
from ReplicaBF.services.report import frame_to_csv, render_reports

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_SOLVER_ERROR = 2

# α 敏感性图的场景网格
SCENARIO_GRID_Z = (2.0, 2.5, 3.0)
SCENARIO_GRID_D = (1.0, 0.75, 0.5)

# ── 辅助函数 ──────────────────────────────────────────────────────────


def _resolve_config(args: argparse.Namespace) -> Config:
    """加载配置文件并应用命令行覆盖"""
    cfg = load_config(args.config)
    return cfg.model_copy(
        update={
            "Solver": cfg.Solver.with_updates(abs_tol=args.tol),
            "Search": cfg.Search.with_updates(gamma_grid=args.gamma_grid, h_max=args.h_max),
            "App": cfg.App.with_updates(jobs=getattr(args, "jobs", None)),
        }
    )


def _emit(text: str, output: str | None) -> None:
    if output:
        path = Path(output)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        logger.info(f"结果已写入 {path}")
    else:
        print(text, end="")


def _select_studies(args: argparse.Namespace) -> list[StudyPair]:
    if args.zstat is not None:
        z_o, z_r, c = args.zstat
        return [StudyPair.from_zstat(z_o, z_r, c, label=args.label or "study")]

    pairs = load_study_pairs(args.input or SSRP_PATH)
    if args.label:
        pairs = [pair for pair in pairs if pair.label == args.label]
        if not pairs:
            raise StudyValidationError(f"找不到标签为 {args.label!r} 的研究", fields=["label"])
    return pairs


def _single_study(args: argparse.Namespace) -> StudyPair:
    studies = _select_studies(args)
    if len(studies) != 1:
        raise StudyValidationError(f"该命令需要单项研究，当前选中 {len(studies)} 项；请用 --label 选择", fields=["label"])
    return studies[0]


def _alpha_grid(lo: float, hi: float, count: int) -> np.ndarray:
    if not 0 < lo < hi < 1:
        raise DomainError(f"α 网格须满足 0 < lo < hi < 1，收到 [{lo}, {hi}]")
    if count < 2:
        raise DomainError(f"α 网格点数至少为 2，收到 {count}")
    return np.linspace(lo, hi, count)


def _bf_vs_alpha_rows(study: StudyPair, alphas: np.ndarray, cfg: Config) -> list[dict]:
    skeptical = solve_skeptical_bf(study, cfg.Solver, cfg.Search)
    bf_s = skeptical.gamma if skeptical is not None else None
    rows = []
    for alpha in alphas:
        mix = solve_skeptical_mixture_bf(study, float(alpha), None, cfg.Solver, cfg.Search)
        row = {
            "label": study.label,
            "z_o": study.z_o,
            "z_r": study.z_r,
            "c": study.c,
            "d": study.d,
            "alpha": float(alpha),
            "status": MixtureStatus.NOT_ATTAINABLE.value if mix is None else mix.status.value,
            "bf_sm": None,
            "psi": None,
            "h": None,
            "p_realized": None,
            "bf_s": bf_s,
        }
        if mix is not None and mix.hyperparams is not None:
            row |= {
                "bf_sm": mix.gamma,
                "psi": mix.hyperparams.psi,
                "h": mix.hyperparams.h,
                "p_realized": mix.p_realized,
            }
        rows.append(row)
    return rows


def _error_details(ns: argparse.Namespace) -> dict[str, Any]:
    """出错时附在日志里的命令参数"""
    return {
        "source": f"cli.{ns.command}",
        "input": getattr(ns, "input", None),
        "label": getattr(ns, "label", None),
        "scenario": getattr(ns, "scenario", None),
        "config": getattr(ns, "config", None),
    }


def _describe_context(context: dict[str, Any]) -> str:
    fields = [f"位置 {context['location']}"]
    fields += [f"{key}={context[key]}" for key in ("input", "label", "scenario") if key in context]
    return "，".join(fields)


def _resolve_scenario_path(name: str) -> Path:
    path = Path(name)
    if path.exists():
        return path
    bundled = SCENARIO_DIR / f"{name}.json"
    if bundled.exists():
        return bundled
    available = ", ".join(sorted(p.stem for p in SCENARIO_DIR.glob("*.json")))
    raise FileNotFoundError(f"找不到模拟场景 {name!r}；内置场景: {available}")


# ── 命令处理函数 ──────────────────────────────────────────────────────


def cmd_analyze(args: argparse.Namespace) -> None:
    """逐研究计算 BF_R、BF_S 与 BF_SM(α)"""
    cfg = _resolve_config(args)
    alphas = tuple(args.alpha) if args.alpha else TABLE_ALPHAS
    studies = _select_studies(args)
    reports = list(
        analyze_studies(studies, alphas, args.h_max, cfg.Solver, cfg.Search, jobs=cfg.App.jobs)
    )
    fmt = OutputFormat.from_value(args.format)
    _emit(render_reports(reports, alphas, fmt, diagnostics=args.diagnostics), args.output)


def cmd_table(args: argparse.Namespace) -> None:
    """内置 12 项研究在三个冲突水平下的汇总表"""
    args.input, args.zstat, args.label, args.alpha = SSRP_PATH, None, None, list(TABLE_ALPHAS)
    cmd_analyze(args)


def cmd_curves(args: argparse.Namespace) -> None:
    """各贝叶斯因子随相对方差变化的曲线数据，附 BF_S 与 BF_SM(α) 作参照列"""
    cfg = _resolve_config(args)
    study = _single_study(args)
    lo, hi, count = args.grid
    if not 0 < lo < hi:
        raise DomainError(f"方差网格须满足 0 < lo < hi，收到 [{lo}, {hi}]")
    h = np.geomspace(lo, hi, int(count))

    bf_0s = np.exp(log_bf_zero_vs_skeptical(study.z_o, h))
    bf_sa = np.exp(log_bf_skeptical_vs_advocate(study.z_o, study.c, study.d, h))
    bf_r = bf_replication(study)
    frame = pd.DataFrame({"h": h, "bf_0s": bf_0s, "bf_sa": bf_sa})

    psi = mixture_along_conflict(study.z_o, args.alpha, h)
    if psi is None:
        logger.info(f"α={args.alpha:g} 低于点质量分量的冲突 p 值，混合曲线留空")
        frame["psi"] = frame["bf_0sm"] = frame["bf_sma"] = math.nan
    else:
        frame["psi"] = psi
        frame["bf_0sm"] = bf_0s / (psi * bf_0s + (1 - psi))
        frame["bf_sma"] = psi * bf_r + (1 - psi) * bf_sa
    frame["bf_r"] = bf_r

    skeptical = solve_skeptical_bf(study, cfg.Solver, cfg.Search)
    mix = solve_skeptical_mixture_bf(study, args.alpha, None, cfg.Solver, cfg.Search)
    frame["bf_s"] = math.nan if skeptical is None else skeptical.gamma
    frame["bf_sm"] = math.nan if mix is None else mix.gamma
    _emit(frame_to_csv(frame), args.output)


def cmd_contours(args: argparse.Namespace) -> None:
    """冲突 p 值网格与 U_γ 曲线"""
    cfg = _resolve_config(args)
    resolution = args.resolution or cfg.Conflict.resolution
    h_range = Bracket(*(args.h_range or (cfg.Conflict.h_lo, cfg.Conflict.h_hi)))
    psi_range = Bracket(*(args.psi_range or (cfg.Conflict.psi_lo, cfg.Conflict.psi_hi)))
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    grid = conflict_grid(args.z_o, h_range, psi_range, resolution)
    (out_dir / "conflict_grid.csv").write_text(frame_to_csv(grid.to_frame()), encoding="utf-8")

    _, gamma_min = attainable_minimum(args.z_o, cfg.Solver, cfg.Search)
    status: dict[str, object] = {"z_o": args.z_o, "gamma": args.gamma, "gamma_min": gamma_min}
    trace_columns = ["h", "psi", "p_conflict"]
    try:
        points = u_gamma_trace(args.z_o, args.gamma, cfg.Conflict.trace_points, cfg.Solver, cfg.Search)
    except GammaNotAttainable as e:
        logger.info(str(e))
        trace = pd.DataFrame(columns=trace_columns)
        status |= {"status": "gamma not attainable", "alpha_supremum": None}
    else:
        trace = pd.DataFrame([(p.h, p.psi, p.p_conflict) for p in points], columns=trace_columns)
        status |= {"status": "ok", "alpha_supremum": max(p.p_conflict for p in points)}

    (out_dir / "u_gamma.csv").write_text(frame_to_csv(trace), encoding="utf-8")
    (out_dir / "contours.json").write_text(json.dumps(status, indent=4, ensure_ascii=False), encoding="utf-8")
    logger.info(f"等高线数据已写入 {out_dir}（{status['status']}）")


def cmd_bf_vs_alpha(args: argparse.Namespace) -> None:
    """BF_SM 随冲突水平 α 的变化，附 BF_S 作参照"""
    cfg = _resolve_config(args)
    alphas = _alpha_grid(*args.alpha_grid[:2], int(args.alpha_grid[2]))

    if args.scenario_grid:
        studies = [
            StudyPair.from_zstat(z_o, d * z_o, 1.0, label=f"z_o={z_o:g},d={d:g}")
            for z_o in SCENARIO_GRID_Z
            for d in SCENARIO_GRID_D
        ]
    else:
        studies = [_single_study(args)]

    rows = [row for study in studies for row in _bf_vs_alpha_rows(study, alphas, cfg)]
    _emit(frame_to_csv(pd.DataFrame(rows)), args.output)


def cmd_simulate(args: argparse.Namespace) -> None:
    """运行一致性模拟场景"""
    spec = load_scenario(_resolve_scenario_path(args.scenario))
    frame = run_scenario(spec, seed=args.seed)
    _emit(frame_to_csv(frame), args.output)


# ── 参数解析 & 主入口 ─────────────────────────────────────────────────


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=None, help="JSON 配置文件路径")
    p.add_argument(
        "--log-level",
        default=None,
        choices=[level.name for level in LogLevelEnum],
        help="日志级别 (默认取配置文件，否则为 INFO)",
    )
    p.add_argument("--tol", type=float, default=None, help="求根绝对容差 (默认: 1e-10)")
    p.add_argument("--gamma-grid", type=int, default=None, help="γ 下确界扫描的网格点数 (默认: 400)")
    p.add_argument("--h-max", type=float, default=None, help="混合先验相对方差 h 的搜索上限 (默认: 100)")
    p.add_argument("--output", default=None, help="输出文件路径 (默认写到 stdout)")


def _add_study_source(p: argparse.ArgumentParser) -> None:
    source = p.add_mutually_exclusive_group()
    source.add_argument("--input", default=None, help="研究表格 CSV (默认: 内置 12 项研究)")
    source.add_argument(
        "--zstat", nargs=3, type=float, metavar=("Z_O", "Z_R", "C"), default=None, help="直接给出单项研究"
    )
    p.add_argument("--label", default=None, help="按标签选择研究；与 --zstat 同用时作为该研究的标签")


def _add_report_options(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--format",
        default=OutputFormat.TEXT.value,
        choices=[fmt.value for fmt in OutputFormat],
        help="输出格式 (默认: text)",
    )
    p.add_argument("--diagnostics", action="store_true", help="输出边界标志与双根残差")
    p.add_argument("--jobs", type=int, default=None, help="并行进程数，输出顺序与输入一致 (默认: 1)")


def build_parser() -> argparse.ArgumentParser:
    """构建 ArgumentParser（可供外部程序复用）。"""
    parser = argparse.ArgumentParser(
        prog="replica-bf",
        description="ReplicaBF —— 基于怀疑先验与怀疑混合先验的重复实验贝叶斯因子分析。",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(title="子命令", dest="command")

    # ── analyze ──
    p = subparsers.add_parser("analyze", help="逐研究计算 BF_R、BF_S 与 BF_SM(α)")
    _add_common(p)
    _add_study_source(p)
    _add_report_options(p)
    p.add_argument("--alpha", type=float, action="append", default=None, help="冲突水平 α，可重复 (默认: 0.01 0.05 0.1)")
    p.set_defaults(func=cmd_analyze)

    # ── table ──
    p = subparsers.add_parser("table", help="内置研究在 α ∈ {0.01, 0.05, 0.1} 下的汇总表")
    _add_common(p)
    _add_report_options(p)
    p.set_defaults(func=cmd_table)

    # ── curves ──
    p = subparsers.add_parser("curves", help="贝叶斯因子随相对方差变化的曲线数据 (CSV)")
    _add_common(p)
    _add_study_source(p)
    p.add_argument(
        "--grid",
        nargs=3,
        type=float,
        metavar=("LO", "HI", "N"),
        default=(0.01, 100.0, 200),
        help="相对方差的对数网格 (默认: 0.01 100 200)",
    )
    p.add_argument("--alpha", type=float, default=0.1, help="混合先验的冲突水平 α (默认: 0.1)")
    p.set_defaults(func=cmd_curves)

    # ── contours ──
    p = subparsers.add_parser("contours", help="冲突 p 值网格与 U_γ 曲线")
    _add_common(p)
    p.add_argument("--z-o", type=float, required=True, help="原始研究的 z 值")
    p.add_argument("--gamma", type=float, required=True, help="怀疑水平 γ ∈ (0, 1)")
    p.add_argument("--h-range", nargs=2, type=float, metavar=("LO", "HI"), default=None, help="h 范围")
    p.add_argument("--psi-range", nargs=2, type=float, metavar=("LO", "HI"), default=None, help="ψ 范围")
    p.add_argument("--resolution", type=int, default=None, help="网格分辨率 (默认: 200)")
    p.add_argument("--output-dir", default=".", help="输出目录 (默认: 当前目录)")
    p.set_defaults(func=cmd_contours)

    # ── bf-vs-alpha ──
    p = subparsers.add_parser("bf-vs-alpha", help="BF_SM 随冲突水平 α 的变化 (CSV)")
    _add_common(p)
    _add_study_source(p)
    p.add_argument(
        "--alpha-grid",
        nargs=3,
        type=float,
        metavar=("LO", "HI", "N"),
        default=(0.01, 0.2, 20),
        help="α 的线性网格 (默认: 0.01 0.2 20)",
    )
    p.add_argument("--scenario-grid", action="store_true", help="输出 z_o ∈ {2, 2.5, 3} × d ∈ {1, 0.75, 0.5} 的九条曲线")
    p.set_defaults(func=cmd_bf_vs_alpha)

    # ── simulate ──
    p = subparsers.add_parser("simulate", help="运行一致性模拟场景")
    p.add_argument("scenario", help="场景 JSON 路径或内置场景名 (如 prop1-null)")
    p.add_argument("--seed", type=int, default=None, help="覆盖场景文件中的随机种子")
    p.add_argument("--output", default=None, help="输出 CSV 路径 (默认写到 stdout)")
    p.add_argument("--config", default=None, help="JSON 配置文件路径 (只读取 App 段的日志设置)")
    p.add_argument("--log-level", default=None, choices=[level.name for level in LogLevelEnum], help="日志级别")
    p.set_defaults(func=cmd_simulate)

    return parser


def main(args: list[str] | None = None) -> int:
    """CLI 主入口，返回退出码。"""
    if hasattr(sys.stdout, "reconfigure"):
        sys.stdout.reconfigure(encoding="utf-8")  # type: ignore[union-attr]
    parser = build_parser()
    ns = parser.parse_args(args)
    if not hasattr(ns, "func"):
        parser.print_help()
        return EXIT_INPUT_ERROR

    try:
        app = load_config(ns.config).App
        init_logging(ns.log_level or app.log_level.name, app.log_file)
        ns.func(ns)
    except (StudyValidationError, ValidationError, DomainError, FileNotFoundError, json.JSONDecodeError) as e:
        context = capture_handled_exception(e, **_error_details(ns))
        logger.error(f"输入错误: {e}（{_describe_context(context)}）")
        return EXIT_INPUT_ERROR
    except SolverError as e:
        context = capture_handled_exception(e, **_error_details(ns))
        logger.error(f"数值求解失败: {e}（{_describe_context(context)}）")
        return EXIT_SOLVER_ERROR
    finally:
        logger.complete()
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
