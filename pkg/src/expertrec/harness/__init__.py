from .config import AGENTS, PROFILES, ConfigError, ExperimentConfig, apply_overrides, load_config, to_ini
from .experiment import Artifacts, ArmResult, MissingArtifact, build_artifacts, run_experiment, run_pipeline, simulate_arm
from .metrics import MetricsRow, compute_metrics, load_metrics, save_metrics
from .report import emit_report, paired_margin, quantile_grid, summarize
