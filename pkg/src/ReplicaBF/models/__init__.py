from .config import Config, load_config
from .study import ConsistencyScenario, MixtureHyperparams, RawStudyRecord, StudyMode, StudyPair

__all__ = [
    "Config",
    "load_config",
    "StudyPair",
    "StudyMode",
    "MixtureHyperparams",
    "RawStudyRecord",
    "ConsistencyScenario",
]
