import sys
from pathlib import Path

# 基本
IS_DEV = not getattr(sys, "frozen", False) and (Path(__file__).parents[2] / "pyproject.toml").exists()
RBF_PKGDIR = Path(__file__).resolve().parent

# 资源目录
RBF_RESDIR = RBF_PKGDIR / "resources"
SSRP_PATH = RBF_RESDIR / "ssrp.csv"
SCENARIO_DIR = RBF_RESDIR / "scenarios"

# 表格输出
NONEXISTENT_MARK = "-"
TINY_THRESHOLD = 0.001
TINY_MARK = "<0.001"

# 汇总表使用的冲突水平
TABLE_ALPHAS = (0.01, 0.05, 0.1)
