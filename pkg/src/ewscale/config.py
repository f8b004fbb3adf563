"""Declarative experiment configuration.

INI-style sections ``[model] [noise] [sim] [analysis]`` with keys matching
the type field names. Parsing is fail-closed: unknown sections or keys are
errors. A parsed config serializes to a canonical text form that parses
back to an identical config.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field
from typing import Any

from .errors import ConfigError
from .models import ModelKind, ModelSpec, attracting_branch
from .noise import NoiseKind, NoiseSpec
from .simulate import SimConfig

__all__ = ["ExperimentConfig", "SCHEMA"]

# section -> key -> (type, default); default None means optional/derived
SCHEMA: dict[str, dict[str, tuple[type, Any]]] = {
    "model": {
        "kind": (str, None),
        "epsilon": (float, 0.01),
        "sigma": (float, 0.01),
        "slow_rate": (float, None),
        "eta2": (float, None),
    },
    "noise": {
        "kind": (str, None),
        "tau": (float, None),
        "hurst": (float, None),
    },
    "sim": {
        "x0": (float, None),
        "y0": (float, None),
        "dt": (float, None),
        "t_end": (float, None),
        "n_paths": (int, None),
        "master_seed": (int, None),
        "record_stride": (int, 10),
        "jump_delta": (float, 0.3),
        "keep_paths": (int, 0),
    },
    "analysis": {
        "d_min": (float, 0.05),
        "d_max": (float, 0.5),
        "bins": (int, 12),
        "tolerance": (float, 0.15),
        "out_dir": (str, "."),
    },
}

_REQUIRED = [("model", "kind"), ("noise", "kind"), ("sim", "y0"), ("sim", "dt"),
             ("sim", "t_end"), ("sim", "n_paths"), ("sim", "master_seed")]


@dataclass
class ExperimentConfig:
    """Everything one run needs: model, noise, simulation, analysis window."""

    values: dict[str, dict[str, Any]] = field(default_factory=dict)

    # -- construction -------------------------------------------------------

    @staticmethod
    def from_string(text: str) -> "ExperimentConfig":
        parser = configparser.ConfigParser(interpolation=None)
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"malformed config: {exc}") from exc
        values: dict[str, dict[str, Any]] = {}
        for section in parser.sections():
            if section not in SCHEMA:
                raise ConfigError(f"unknown config section [{section}]")
            values[section] = {}
            for key, raw in parser.items(section):
                if key not in SCHEMA[section]:
                    raise ConfigError(f"unknown key '{key}' in section [{section}]")
                typ = SCHEMA[section][key][0]
                try:
                    values[section][key] = typ(raw)
                except ValueError as exc:
                    raise ConfigError(
                        f"key {section}.{key}: cannot parse {raw!r} as {typ.__name__}"
                    ) from exc
        cfg = ExperimentConfig(values)
        cfg._apply_defaults()
        cfg._check_required()
        return cfg

    @staticmethod
    def from_file(path: str) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return ExperimentConfig.from_string(fh.read())

    def _apply_defaults(self) -> None:
        for section, keys in SCHEMA.items():
            sec = self.values.setdefault(section, {})
            for key, (_typ, default) in keys.items():
                if default is not None and key not in sec:
                    sec[key] = default

    def _check_required(self) -> None:
        missing = [f"{s}.{k}" for s, k in _REQUIRED if self.get(s, k) is None]
        if missing:
            raise ConfigError(f"missing required config keys: {', '.join(missing)}")

    # -- access --------------------------------------------------------------

    def get(self, section: str, key: str) -> Any:
        return self.values.get(section, {}).get(key)

    def set(self, section: str, key: str, value: Any) -> None:
        if section not in SCHEMA or key not in SCHEMA[section]:
            raise ConfigError(f"unknown config key {section}.{key}")
        typ = SCHEMA[section][key][0]
        try:
            self.values.setdefault(section, {})[key] = typ(value)
        except ValueError as exc:
            raise ConfigError(f"key {section}.{key}: cannot parse {value!r}") from exc

    # -- canonical form ------------------------------------------------------

    def to_string(self) -> str:
        """Canonical serialization: fixed section and key order, repr floats."""
        out = io.StringIO()
        for section, keys in SCHEMA.items():
            sec = self.values.get(section, {})
            present = [k for k in keys if k in sec]
            if not present:
                continue
            out.write(f"[{section}]\n")
            for key in present:
                val = sec[key]
                if isinstance(val, float):
                    text = repr(val)
                else:
                    text = str(val)
                out.write(f"{key} = {text}\n")
            out.write("\n")
        return out.getvalue()

    # -- materialization -----------------------------------------------------

    def noise_spec(self) -> NoiseSpec:
        kind = self.get("noise", "kind")
        try:
            nk = NoiseKind(kind)
        except ValueError:
            raise ConfigError(f"unknown noise kind {kind!r}") from None
        return NoiseSpec(nk, tau=self.get("noise", "tau"),
                         hurst=self.get("noise", "hurst"))

    def model_spec(self) -> ModelSpec:
        kind = self.get("model", "kind")
        try:
            mk = ModelKind(kind)
        except ValueError:
            raise ConfigError(f"unknown model kind {kind!r}") from None
        return ModelSpec(mk, epsilon=self.get("model", "epsilon"),
                         sigma=self.get("model", "sigma"),
                         slow_rate=self.get("model", "slow_rate"),
                         eta2=self.get("model", "eta2"))

    def sim_config(self) -> SimConfig:
        model = self.model_spec()
        noise = self.noise_spec()
        y0 = self.get("sim", "y0")
        x0 = self.get("sim", "x0")
        if x0 is None:
            x0 = attracting_branch(model, y0)
        return SimConfig(
            model=model, noise=noise, x0=x0, y0=y0,
            dt=self.get("sim", "dt"), t_end=self.get("sim", "t_end"),
            n_paths=self.get("sim", "n_paths"),
            master_seed=self.get("sim", "master_seed"),
            record_stride=self.get("sim", "record_stride"),
            jump_delta=self.get("sim", "jump_delta"),
            keep_paths=self.get("sim", "keep_paths"),
        )
