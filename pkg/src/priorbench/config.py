"""Run configuration files and manifests.

Flat INI-style key-value text with sections, parsed by configparser.  Every
key has a default; a config file only states what it overrides.  Validation
failures name the offending field as ``section.key`` so CLI diagnostics stay
actionable.
"""

import configparser
import hashlib
import os
from dataclasses import dataclass, field

from .bench import LatencyProtocol
from .data import DEFAULT_CONDITIONS, DEFAULT_DIM, DEFAULT_TASK_SEED
from .errors import ConfigError
from .evaluation import EvalSettings
from .training import TrainConfig

RUN_ROOT_ENV = "PRIORBENCH_RUNS"
DEFAULT_RUN_ROOT = "runs"
MANIFEST_NAME = "manifest.ini"

_BOOL_WORDS = {"true": True, "1": True, "yes": True,
               "false": False, "0": False, "no": False}


@dataclass
class TaskSettings:
    conditions: int = DEFAULT_CONDITIONS
    dim: int = DEFAULT_DIM
    task_seed: int = DEFAULT_TASK_SEED
    anisotropic: bool = False
    n_per_condition: int = 1000

    def validate(self) -> None:
        if self.conditions < 2:
            raise ConfigError(f"task.conditions: need >= 2, got {self.conditions}")
        if self.dim < 1:
            raise ConfigError(f"task.dim: need >= 1, got {self.dim}")
        if self.n_per_condition < 10:
            raise ConfigError(
                f"task.n_per_condition: need >= 10, got {self.n_per_condition}")


@dataclass
class RunConfig:
    run_id: str = ""   # empty: callers derive one from objective and seed
    objective: str = "flow"
    seed: int = 0
    task: TaskSettings = field(default_factory=TaskSettings)
    training: TrainConfig = None
    latency: LatencyProtocol = field(default_factory=LatencyProtocol)

    def validate(self) -> None:
        self.task.validate()
        self.training.validate()
        self.latency.validate()


def _parse(parser, section, key, cast, current):
    if not parser.has_option(section, key):
        return current
    raw = parser.get(section, key)
    try:
        if cast is bool:
            word = raw.strip().lower()
            if word not in _BOOL_WORDS:
                raise ValueError(f"not a boolean: {raw!r}")
            return _BOOL_WORDS[word]
        return cast(raw)
    except ValueError as exc:
        raise ConfigError(f"{section}.{key}: {exc}") from exc


def load_run_config(path: str, overrides: dict = None) -> RunConfig:
    """Parse an INI run config; unknown sections or keys are errors."""
    parser = configparser.ConfigParser()
    parser.optionxform = str
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"config file {path}: {exc}") from exc

    known = {
        "run": {"id": str, "objective": str, "seed": int},
        "task": {"conditions": int, "dim": int, "task_seed": int,
                 "anisotropic": bool, "n_per_condition": int},
        "training": {"epochs": int, "batch_size": int, "lr": float,
                     "beta1": float, "beta2": float, "weight_decay": float,
                     "eval_every": int},
        "schedule": {"steps": int, "beta_start": float, "beta_end": float},
        "network": {"hidden": int, "time_dim": int, "time_base": float},
        "eval": {"n_generate": int, "diffusion_steps": int, "flow_steps": int,
                 "diversity_pairs": int, "multimodality_reps": int},
        "latency": {"batch_size": int, "warmup": int, "timed": int, "mode": str},
    }
    for section in parser.sections():
        if section not in known:
            raise ConfigError(f"{section}: unknown config section")
        for key in parser.options(section):
            if key not in known[section]:
                raise ConfigError(f"{section}.{key}: unknown key")

    cfg = RunConfig()
    cfg.run_id = _parse(parser, "run", "id", str, cfg.run_id)
    cfg.objective = _parse(parser, "run", "objective", str, cfg.objective)
    cfg.seed = _parse(parser, "run", "seed", int, cfg.seed)
    for key in ("conditions", "dim", "task_seed", "anisotropic", "n_per_condition"):
        cast = known["task"][key]
        setattr(cfg.task, key, _parse(parser, "task", key, cast, getattr(cfg.task, key)))

    if overrides:
        for key, value in overrides.items():
            if value is None:
                continue
            if key in ("objective", "seed", "run_id"):
                setattr(cfg, key, value)
            elif key == "epochs":
                pass  # applied after TrainConfig is built
            else:
                raise ConfigError(f"override {key}: unknown field")

    train = TrainConfig(objective=cfg.objective, seed=cfg.seed)
    for key in ("epochs", "batch_size", "lr", "beta1", "beta2",
                "weight_decay", "eval_every"):
        cast = known["training"][key]
        setattr(train, key, _parse(parser, "training", key, cast, getattr(train, key)))
    train.schedule_steps = _parse(parser, "schedule", "steps", int, train.schedule_steps)
    train.beta_start = _parse(parser, "schedule", "beta_start", float, train.beta_start)
    train.beta_end = _parse(parser, "schedule", "beta_end", float, train.beta_end)
    train.hidden = _parse(parser, "network", "hidden", int, train.hidden)
    train.d_time = _parse(parser, "network", "time_dim", int, train.d_time)
    train.time_base = _parse(parser, "network", "time_base", float, train.time_base)
    ev = EvalSettings()
    for key in ("n_generate", "diffusion_steps", "flow_steps",
                "diversity_pairs", "multimodality_reps"):
        setattr(ev, key, _parse(parser, "eval", key, int, getattr(ev, key)))
    train.eval = ev
    if overrides and overrides.get("epochs") is not None:
        train.epochs = overrides["epochs"]
    cfg.training = train

    lat = LatencyProtocol()
    lat.batch_size = _parse(parser, "latency", "batch_size", int, lat.batch_size)
    lat.warmup = _parse(parser, "latency", "warmup", int, lat.warmup)
    lat.timed = _parse(parser, "latency", "timed", int, lat.timed)
    lat.mode = _parse(parser, "latency", "mode", str, lat.mode)
    cfg.latency = lat

    cfg.validate()
    return cfg


def run_root() -> str:
    return os.environ.get(RUN_ROOT_ENV, DEFAULT_RUN_ROOT)


def resolve_run_dir(run_id: str) -> str:
    return os.path.join(run_root(), run_id)


@dataclass
class RunManifest:
    """String key-value sections; round-trips losslessly through INI text."""

    sections: dict = field(default_factory=dict)

    def set(self, section: str, key: str, value) -> None:
        self.sections.setdefault(section, {})[key] = str(value)

    def save(self, path: str) -> None:
        parser = configparser.ConfigParser()
        parser.optionxform = str
        for section, pairs in self.sections.items():
            parser[section] = {k: str(v) for k, v in pairs.items()}
        with open(path, "w") as fh:
            parser.write(fh)

    @classmethod
    def load(cls, path: str) -> "RunManifest":
        parser = configparser.ConfigParser()
        parser.optionxform = str
        with open(path) as fh:
            parser.read_file(fh)
        sections = {s: dict(parser.items(s)) for s in parser.sections()}
        return cls(sections=sections)

    def hash(self) -> str:
        digest = hashlib.sha256()
        for section in sorted(self.sections):
            for key in sorted(self.sections[section]):
                line = f"{section}\0{key}\0{self.sections[section][key]}\n"
                digest.update(line.encode("utf-8"))
        return digest.hexdigest()


def manifest_for(cfg: RunConfig, out_dir: str) -> RunManifest:
    m = RunManifest()
    m.set("run", "id", cfg.run_id)
    m.set("run", "objective", cfg.objective)
    m.set("run", "seed", cfg.seed)
    m.set("run", "out_dir", out_dir)
    for key in ("conditions", "dim", "task_seed", "anisotropic", "n_per_condition"):
        m.set("task", key, getattr(cfg.task, key))
    t = cfg.training
    for key in ("epochs", "batch_size", "lr", "beta1", "beta2", "weight_decay",
                "eval_every", "schedule_steps", "beta_start", "beta_end",
                "hidden", "d_time", "time_base"):
        m.set("training", key, getattr(t, key))
    for key in ("n_generate", "diffusion_steps", "flow_steps",
                "diversity_pairs", "multimodality_reps"):
        m.set("eval", key, getattr(t.eval, key))
    for key in ("batch_size", "warmup", "timed", "mode"):
        m.set("latency", key, getattr(cfg.latency, key))
    return m
