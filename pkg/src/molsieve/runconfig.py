"""Run configuration: config file, flag overrides, and the run manifest.

A run is fully specified by an INI-style config file whose sections mirror
the module layout (library, features, surrogate, acquisition, campaign,
output). Every CLI flag has a config-file equivalent; a flag given on the
command line beats the file, and the manifest records the resolved value
of every setting, the input file checksums, the tool version, and the
wall-clock timings, which together suffice to reproduce the run.
"""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

from molsieve.acquisition import STRATEGIES
from molsieve.campaign import DIVERSITY_EXACT, DIVERSITY_OFF, DIVERSITY_SUBSAMPLE, CampaignConfig
from molsieve.errors import ConfigInvalid
from molsieve.features import ATOM_PAIR_BITS, EXTERNAL_EMBEDDING, MORGAN_BITS, FeatureConfig
from molsieve.library import MAXIMIZE, MINIMIZE, IngestOptions
from molsieve.surrogate import SURROGATES
from molsieve.surrogate.base import MODE_MSE, MODE_NLL, TrainConfig

FEATURE_ALIASES = {"atom-pair": ATOM_PAIR_BITS, "morgan": MORGAN_BITS, "embedding": EXTERNAL_EMBEDDING}
DIRECTION_ALIASES = {"min": MINIMIZE, "max": MAXIMIZE}


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_seeds(text: str) -> list[int]:
    return [int(part) for part in str(text).split(",") if part.strip() != ""]


def _parse_optional_int(text: str) -> int | None:
    return None if text.strip().lower() in ("none", "unlimited") else int(text)


@dataclass(frozen=True)
class Setting:
    """One configurable value: config-file location, type, and default."""

    section: str
    key: str
    convert: Callable[[str], Any]
    default: Any
    choices: tuple | None = None

    @property
    def dest(self) -> str:
        # argparse destination; flags are --<key-with-dashes>
        return self.key


SETTINGS: list[Setting] = [
    Setting("library", "library", str, None),
    Setting("library", "smiles_col", str, "smiles"),
    Setting("library", "score_col", str, "score"),
    Setting("library", "delimiter", str, "comma", choices=("comma", "tab")),
    Setting("library", "direction", str, "min", choices=tuple(DIRECTION_ALIASES)),
    Setting("library", "strict", _parse_bool, False),
    Setting("features", "features", str, "atom-pair", choices=tuple(FEATURE_ALIASES)),
    Setting("features", "width", int, 2048),
    Setting("features", "morgan_radius", int, 3),
    Setting("features", "pair_min_radius", int, 1),
    Setting("features", "pair_max_radius", int, 3),
    Setting("features", "embeddings", str, None),
    Setting("surrogate", "surrogate", str, "rf", choices=tuple(sorted(SURROGATES))),
    Setting("surrogate", "mode", str, "auto", choices=("auto", MODE_MSE, MODE_NLL)),
    Setting("surrogate", "split_fraction", float, 0.8),
    Setting("surrogate", "patience", int, 10),
    Setting("surrogate", "max_epochs", int, 50),
    Setting("surrogate", "n_trees", int, 100),
    Setting("surrogate", "learning_rate", float, 5e-4),
    Setting("surrogate", "batch_size", int, 32),
    Setting("surrogate", "hidden1", int, 256),
    Setting("surrogate", "hidden2", int, 128),
    Setting("surrogate", "rf_max_depth", _parse_optional_int, 8),
    Setting("surrogate", "rf_min_samples_leaf", int, 1),
    Setting("surrogate", "rf_bootstrap", _parse_bool, True),
    Setting("surrogate", "gbt_max_leaves", _parse_optional_int, 31),
    Setting("surrogate", "gbt_learning_rate", float, 0.1),
    Setting("acquisition", "acquisition", str, "greedy", choices=STRATEGIES),
    Setting("acquisition", "beta", float, 2.0),
    Setting("campaign", "init_frac", float, 0.01),
    Setting("campaign", "batch_frac", float, 0.01),
    Setting("campaign", "iterations", int, 5),
    Setting("campaign", "top_k", int, 500),
    Setting("campaign", "seed", _parse_seeds, [0]),
    Setting(
        "campaign", "diversity", str, DIVERSITY_OFF,
        choices=(DIVERSITY_OFF, DIVERSITY_EXACT, DIVERSITY_SUBSAMPLE),
    ),
    Setting("output", "out", str, "molsieve-out"),
    Setting("output", "jobs", int, 1),
]

_BY_DEST = {s.dest: s for s in SETTINGS}
_SECTIONS = {s.section for s in SETTINGS}


def read_config_file(path: str | Path) -> dict[str, Any]:
    """Parse an INI config file into resolved setting values."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with Path(path).open(encoding="utf-8") as handle:
            parser.read_file(handle)
    except configparser.Error as exc:
        raise ConfigInvalid(f"{path}: {exc}") from None

    known = {(s.section, s.key): s for s in SETTINGS}
    values: dict[str, Any] = {}
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigInvalid(f"{path}: unknown section [{section}]")
        for key, raw in parser.items(section):
            setting = known.get((section, key))
            if setting is None:
                raise ConfigInvalid(f"{path}: unknown key {key!r} in section [{section}]")
            values[setting.dest] = _convert(setting, raw, f"{path}: [{section}] {key}")
    return values


def _convert(setting: Setting, raw: str, context: str) -> Any:
    try:
        value = setting.convert(raw)
    except ValueError as exc:
        raise ConfigInvalid(f"{context}: {exc}") from None
    if setting.choices is not None and value not in setting.choices:
        raise ConfigInvalid(f"{context}: {value!r} not one of {list(setting.choices)}")
    return value


@dataclass
class RunSettings:
    """All resolved values of one run, before object construction."""

    values: dict[str, Any]

    def __getitem__(self, dest: str) -> Any:
        return self.values[dest]

    def to_manifest_config(self) -> dict[str, dict[str, Any]]:
        out: dict[str, dict[str, Any]] = {}
        for setting in SETTINGS:
            out.setdefault(setting.section, {})[setting.key] = self.values[setting.dest]
        return out


def resolve_settings(
    config_path: str | Path | None, overrides: dict[str, Any]
) -> RunSettings:
    """Combine defaults, config-file values, and CLI overrides (flag wins)."""
    values = {s.dest: s.default for s in SETTINGS}
    if config_path is not None:
        values.update(read_config_file(config_path))
    for dest, value in overrides.items():
        if value is None:
            continue
        if dest not in _BY_DEST:
            raise ConfigInvalid(f"unknown setting {dest!r}")
        setting = _BY_DEST[dest]
        if isinstance(value, str):
            value = _convert(setting, value, f"--{dest.replace('_', '-')}")
        elif setting.choices is not None and value not in setting.choices:
            raise ConfigInvalid(f"--{dest.replace('_', '-')}: {value!r} not one of {list(setting.choices)}")
        values[dest] = value
    return RunSettings(values)


def build_ingest_options(settings: RunSettings) -> IngestOptions:
    return IngestOptions(
        smiles_col=settings["smiles_col"],
        score_col=settings["score_col"],
        delimiter="\t" if settings["delimiter"] == "tab" else ",",
        direction=DIRECTION_ALIASES[settings["direction"]],
        strict=settings["strict"],
        fingerprint=build_feature_config(settings).fingerprint_spec(),
    )


def build_feature_config(settings: RunSettings) -> FeatureConfig:
    return FeatureConfig(
        source=FEATURE_ALIASES[settings["features"]],
        width=settings["width"],
        morgan_radius=settings["morgan_radius"],
        pair_min_radius=settings["pair_min_radius"],
        pair_max_radius=settings["pair_max_radius"],
    )


def build_train_config(settings: RunSettings, jobs: int) -> TrainConfig:
    mode = settings["mode"]
    if mode == "auto":
        mode = MODE_NLL if settings["acquisition"] == "ucb" else MODE_MSE
    return TrainConfig(
        mode=mode,
        split_fraction=settings["split_fraction"],
        patience=settings["patience"],
        max_epochs=settings["max_epochs"],
        n_trees=settings["n_trees"],
        jobs=jobs,
        learning_rate=settings["learning_rate"],
        batch_size=settings["batch_size"],
        hidden_sizes=(settings["hidden1"], settings["hidden2"]),
        rf_max_depth=settings["rf_max_depth"],
        rf_min_samples_leaf=settings["rf_min_samples_leaf"],
        rf_bootstrap=settings["rf_bootstrap"],
        gbt_max_leaves=settings["gbt_max_leaves"],
        gbt_learning_rate=settings["gbt_learning_rate"],
    )


def build_campaign_config(settings: RunSettings, seed: int) -> CampaignConfig:
    return CampaignConfig(
        feature=build_feature_config(settings),
        surrogate=settings["surrogate"],
        train=build_train_config(settings, settings["jobs"]),
        strategy=settings["acquisition"],
        beta=settings["beta"],
        init_frac=settings["init_frac"],
        batch_frac=settings["batch_frac"],
        iterations=settings["iterations"],
        top_k=settings["top_k"],
        seed=seed,
        diversity=settings["diversity"],
    )


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()
