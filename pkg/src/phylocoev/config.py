"""Experiment configuration: defaults, file parsing, and validation.

Config files are flat key = value text; '#' starts a comment. CLI flags
override file values. Unset population sizes fall back to the standard
per-domain setup (numbers games 25/75/50, sorting networks 100/500/200).
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

from .matchmaking import SCHEMES, ConfigurationError

DOMAINS = ("numbers-coo", "numbers-coa", "sorting")
PROBE_MODES = ("heldout", "evaluated")

_TABLE_DEFAULTS = {
    "numbers-coo": (25, 75, 50),
    "numbers-coa": (25, 75, 50),
    "sorting": (100, 500, 200),
}


@dataclass(frozen=True)
class ExperimentConfig:
    domain: str
    eval_budget: int
    matchmaker: str = "parents-vs-all"
    n_parents: int | None = None
    n_children: int | None = None
    cohort_size: int | None = None
    k_nearest: int = 2
    horizon: int = 10
    probe_count: int = 200
    seed: int = 0
    trial_count: int = 1
    output_path: str = "out"
    p_all: float = 0.05
    child_matchups: int = 0
    probe_mode: str = "heldout"
    workers: int = 1
    export_phylogeny: bool = False
    label: str = ""

    @property
    def population_size(self) -> int:
        return self.n_parents + self.n_children

    @property
    def treatment(self) -> str:
        return self.label or f"{self.domain}_{self.matchmaker}"


def finalize(cfg: ExperimentConfig) -> ExperimentConfig:
    """Fill domain defaults, then validate; raises listing every violation."""
    if cfg.domain in _TABLE_DEFAULTS:
        parents, children, cohort = _TABLE_DEFAULTS[cfg.domain]
        cfg = replace(
            cfg,
            n_parents=cfg.n_parents if cfg.n_parents is not None else parents,
            n_children=cfg.n_children if cfg.n_children is not None else children,
            cohort_size=cfg.cohort_size if cfg.cohort_size is not None else cohort,
        )
    problems = validate(cfg)
    if problems:
        raise ConfigurationError(
            "invalid configuration:\n  - " + "\n  - ".join(problems)
        )
    return cfg


def validate(cfg: ExperimentConfig) -> list[str]:
    problems = []
    if cfg.domain not in DOMAINS:
        problems.append(f"domain {cfg.domain!r} not one of {DOMAINS}")
    if cfg.matchmaker not in SCHEMES:
        problems.append(f"matchmaker {cfg.matchmaker!r} not one of {SCHEMES}")
    if cfg.n_parents is None or cfg.n_parents < 1:
        problems.append("n_parents must be >= 1")
    if cfg.n_children is None or cfg.n_children < 1:
        problems.append("n_children must be >= 1")
    if cfg.k_nearest < 1:
        problems.append("k_nearest must be >= 1")
    if cfg.horizon < 1:
        problems.append("horizon must be >= 1")
    if cfg.probe_count < 0:
        problems.append("probe_count must be >= 0")
    if cfg.eval_budget < 1:
        problems.append("eval_budget must be >= 1")
    if cfg.trial_count < 1:
        problems.append("trial_count must be >= 1")
    if cfg.seed < 0 or cfg.seed >= 2**64:
        problems.append("seed must fit in 64 unsigned bits")
    if not 0.0 <= cfg.p_all <= 1.0:
        problems.append("p_all must lie in [0, 1]")
    if cfg.probe_mode not in PROBE_MODES:
        problems.append(f"probe_mode {cfg.probe_mode!r} not one of {PROBE_MODES}")
    if cfg.workers < 1:
        problems.append("workers must be >= 1")
    if cfg.n_parents is not None and cfg.n_children is not None:
        pop = cfg.n_parents + cfg.n_children
        if cfg.matchmaker == "random-cohorts":
            if cfg.cohort_size is None or cfg.cohort_size < 1:
                problems.append("random-cohorts requires cohort_size >= 1")
            elif pop % cfg.cohort_size:
                problems.append(
                    f"population size {pop} not divisible by cohort_size {cfg.cohort_size}"
                )
        if cfg.matchmaker == "child-substitution":
            if not 0 <= cfg.child_matchups <= cfg.n_parents:
                problems.append(
                    f"child_matchups={cfg.child_matchups} must lie in [0, n_parents={cfg.n_parents}]"
                )
            elif cfg.child_matchups > cfg.n_children:
                problems.append(
                    f"child_matchups={cfg.child_matchups} exceeds n_children={cfg.n_children}"
                )
    return problems


_BOOL_WORDS = {"true": True, "1": True, "yes": True, "false": False, "0": False, "no": False}
_REQUIRED = ("domain", "eval_budget")


def _coerce(name: str, kind, raw: str):
    if kind in ("int", "int | None"):
        return int(raw)
    if kind == "float":
        return float(raw)
    if kind == "bool":
        word = raw.strip().lower()
        if word not in _BOOL_WORDS:
            raise ConfigurationError(f"{name}: expected a boolean, got {raw!r}")
        return _BOOL_WORDS[word]
    return raw


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Flat key = value lines into a raw settings dict."""
    kinds = {f.name: f.type for f in fields(ExperimentConfig)}
    settings: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigurationError(f"{source}:{lineno}: expected 'key = value'")
        key, _, raw = body.partition("=")
        key = key.strip().replace("-", "_")
        raw = raw.strip()
        if key not in kinds:
            raise ConfigurationError(f"{source}:{lineno}: unknown setting {key!r}")
        settings[key] = _coerce(key, kinds[key], raw)
    return settings


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> ExperimentConfig:
    """Build a validated config from an optional file plus flag overrides."""
    settings: dict = {}
    if path is not None:
        settings.update(parse_config_text(Path(path).read_text(), source=str(path)))
    for key, value in (overrides or {}).items():
        if value is not None:
            settings[key.replace("-", "_")] = value
    missing = [name for name in _REQUIRED if name not in settings]
    if missing:
        raise ConfigurationError(
            "missing required setting(s): " + ", ".join(missing)
        )
    return finalize(ExperimentConfig(**settings))
