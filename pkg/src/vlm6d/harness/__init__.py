from .config import RunConfig, load_run_config
from .evaluate import EvalReport, evaluate
from .infer import infer
from .train import train

__all__ = ["RunConfig", "load_run_config", "EvalReport", "evaluate", "infer", "train"]
