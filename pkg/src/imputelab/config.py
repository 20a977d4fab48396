"""Experiment configuration and its flat ``key = value`` file format.

Keys carry dotted section prefixes (``mlp.epochs``, ``ga.population_size``);
lines starting with ``#`` are comments. Unknown keys are an error, missing keys keep their
defaults, and ``to_text``/``from_text`` round-trip exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .em import EmConfig
from .errors import ConfigError
from .ga import GaConfig
from .mlp import MlpConfig

SOURCES = ("synthetic", "csv")
MISSING_MODES = ("per_column", "joint")
FORMATS = ("text", "csv")


def default_mlp() -> MlpConfig:
    # n_inputs comes from the data; n_hidden == 0 means n_inputs - 1
    return MlpConfig(
        n_inputs=0,
        n_hidden=0,
        optimizer="lbfgs",
        epochs=1000,
        weight_decay=1e-5,
    )


@dataclass(frozen=True)
class ExperimentConfig:
    source: str = "synthetic"
    kind: str = "nonlinear"
    rows: int = 2000
    path: str = ""
    has_header: bool = True
    missing_token: str = ""
    normalize: bool = True
    test_fraction: float = 1.0 / 7.0
    shuffle: bool = False
    target_columns: tuple | None = None  # names or indices as strings; None = all
    missing_fraction: float = 1.0
    missing_mode: str = "per_column"
    methods: tuple = ("EM", "NNGA")
    mlp: MlpConfig = field(default_factory=default_mlp)
    ga: GaConfig = field(default_factory=GaConfig)
    em: EmConfig = field(default_factory=EmConfig)
    restarts: int = 4  # autoencoder restarts, best training loss kept
    tolerance: float = 0.10
    seed: int = 0
    output_path: str = ""
    output_format: str = "text"
    artifacts_dir: str = ""

    def validate(self) -> None:
        if self.source not in SOURCES:
            raise ConfigError(f"data.source must be one of {SOURCES}")
        if self.source == "csv" and not self.path:
            raise ConfigError("data.path is required for csv sources")
        if not self.methods:
            raise ConfigError("at least one method is required")
        for m in self.methods:
            if m not in ("EM", "NNGA"):
                raise ConfigError(f"unknown method {m!r}")
        if self.missing_mode not in MISSING_MODES:
            raise ConfigError(f"missing.mode must be one of {MISSING_MODES}")
        if self.output_format not in FORMATS:
            raise ConfigError(f"output.format must be one of {FORMATS}")
        if not 0.0 < self.test_fraction < 1.0:
            raise ConfigError("split.test_fraction must lie in (0, 1)")
        if not 0.0 < self.missing_fraction <= 1.0:
            raise ConfigError("missing.fraction must lie in (0, 1]")
        if not self.tolerance > 0:
            raise ConfigError("eval.tolerance must be positive")
        if self.restarts < 1:
            raise ConfigError("mlp.restarts must be at least 1")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        self.ga.validate()
        # n_inputs/n_hidden are filled in from the data at run time
        replace(self.mlp, n_inputs=2, n_hidden=1).validate()


# --------------------------------------------------------------------------
# text format

_TOP = {
    "data.source": "source",
    "data.kind": "kind",
    "data.rows": "rows",
    "data.path": "path",
    "data.has_header": "has_header",
    "data.missing_token": "missing_token",
    "data.normalize": "normalize",
    "split.test_fraction": "test_fraction",
    "split.shuffle": "shuffle",
    "missing.columns": "target_columns",
    "missing.fraction": "missing_fraction",
    "missing.mode": "missing_mode",
    "methods": "methods",
    "eval.tolerance": "tolerance",
    "seed": "seed",
    "mlp.restarts": "restarts",
    "output.path": "output_path",
    "output.format": "output_format",
    "output.artifacts": "artifacts_dir",
}
_MLP_KEYS = ("n_hidden", "hidden_activation", "output_activation", "optimizer",
             "epochs", "learning_rate", "weight_decay", "seed")
_GA_KEYS = ("population_size", "generations", "mutation_rate", "crossover_rate",
            "elitism_count", "seed")
_EM_KEYS = ("max_iterations", "tolerance", "ridge", "pd_epsilon")


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse_bool(text):
    t = text.lower()
    if t in ("true", "yes", "1", "on"):
        return True
    if t in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _convert(text, like):
    if isinstance(like, bool):
        return _parse_bool(text)
    if isinstance(like, int):
        return int(text)
    if isinstance(like, float):
        return float(text)
    return text


def to_text(cfg: ExperimentConfig) -> str:
    out = ["# imputelab experiment"]
    for key, attr in _TOP.items():
        if attr == "restarts":
            continue  # written with the mlp block
        v = getattr(cfg, attr)
        if attr == "target_columns":
            v = "all" if v is None else ",".join(v)
        elif attr == "methods":
            v = ",".join(m.lower() for m in v)
        out.append(f"{key} = {_fmt(v)}")
    out.append(f"mlp.restarts = {cfg.restarts}")
    for k in _MLP_KEYS:
        out.append(f"mlp.{k} = {_fmt(getattr(cfg.mlp, k))}")
    for k in _GA_KEYS:
        out.append(f"ga.{k} = {_fmt(getattr(cfg.ga, k))}")
    bounds = cfg.ga.bounds
    out.append("ga.bounds = " + ("default" if bounds is None else
                                 ";".join(f"{lo!r},{hi!r}" for lo, hi in bounds)))
    for k in _EM_KEYS:
        out.append(f"em.{k} = {_fmt(getattr(cfg.em, k))}")
    return "\n".join(out) + "\n"


def from_text(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    cfg = base or ExperimentConfig()
    top, mlp, ga, em = {}, {}, {}, {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        try:
            if key in _TOP:
                attr = _TOP[key]
                if attr == "target_columns":
                    top[attr] = None if value.lower() == "all" else tuple(
                        s.strip() for s in value.split(",") if s.strip())
                elif attr == "methods":
                    top[attr] = tuple(s.strip().upper() for s in value.split(",") if s.strip())
                else:
                    top[attr] = _convert(value, getattr(ExperimentConfig(), attr))
            elif key.startswith("mlp.") and key[4:] in _MLP_KEYS:
                mlp[key[4:]] = _convert(value, getattr(cfg.mlp, key[4:]))
            elif key.startswith("ga.") and key[3:] in _GA_KEYS:
                ga[key[3:]] = _convert(value, getattr(cfg.ga, key[3:]))
            elif key == "ga.bounds":
                ga["bounds"] = None if value in ("", "default") else tuple(
                    tuple(float(x) for x in pair.split(",")) for pair in value.split(";"))
            elif key.startswith("em.") and key[3:] in _EM_KEYS:
                em[key[3:]] = _convert(value, getattr(cfg.em, key[3:]))
            else:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
        except ValueError as err:
            raise ConfigError(f"line {lineno}: bad value for {key}: {err}") from None
    try:
        cfg = replace(
            cfg,
            mlp=replace(cfg.mlp, **mlp),
            ga=replace(cfg.ga, **ga),
            em=replace(cfg.em, **em),
            **top,
        )
    except ValueError as err:
        raise ConfigError(str(err)) from None
    cfg.validate()
    return cfg


def load(path) -> ExperimentConfig:
    with open(path) as fh:
        return from_text(fh.read())
