"""Experiment configuration: parsing, validation, canonical hashing.

Configs are JSON objects with lengths in central wavelengths and times in
multiples of pi/omega_c, so they are scale free.  The carrier is fixed at
omega_c = 2 pi internally, making the wavelength the unit of length.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .medium import ConfigurationError, Reflector

KNOWN_METHODS = ("norm", "ideal", "bp", "rtm", "ps")

DEFAULTS = {
    "scenario": "waveguide",
    "mesh": 16,                       # grid points per wavelength
    "array": {},                      # m, aperture overrides
    "sampling": {},                   # tau_factor (units pi/omega_c), n
    "noise": {"fraction": 0.0, "seed": 0},
    "lambda_min": "auto",
    "imaging": {"x": None, "z": None, "stride": [2, 1]},
    "methods": ["norm", "bp", "rtm"],
    "reflectors": None,               # optional explicit list of dicts
    "ps_points": None,                # pixel-scan point list
    "cfl": 0.5,
    "range_sigma": 0.05,
}


@dataclass(frozen=True)
class ExperimentConfig:
    raw: dict = field(default_factory=dict)

    def __post_init__(self):
        merged = json.loads(json.dumps(DEFAULTS))
        for key, value in self.raw.items():
            if key not in DEFAULTS:
                raise ConfigurationError(f"unknown config key {key!r}")
            if isinstance(DEFAULTS[key], dict) and isinstance(value, dict):
                merged[key].update(value)
            else:
                merged[key] = value
        methods = merged["methods"]
        bad = set(methods) - set(KNOWN_METHODS)
        if bad:
            raise ConfigurationError(f"unknown imaging methods: {sorted(bad)}")
        if merged["noise"]["fraction"] < 0:
            raise ConfigurationError("noise fraction must be non-negative")
        lm = merged["lambda_min"]
        if not (lm == "auto" or (isinstance(lm, (int, float)) and lm > 0)):
            raise ConfigurationError("lambda_min must be 'auto' or positive")
        if merged["mesh"] < 4:
            raise ConfigurationError("mesh must resolve >= 4 points per wavelength")
        object.__setattr__(self, "raw", merged)

    @staticmethod
    def from_file(path) -> "ExperimentConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config {path} is not valid JSON: {exc}")
        return ExperimentConfig(raw=raw)

    def __getitem__(self, key):
        return self.raw[key]

    def to_json(self) -> str:
        return json.dumps(self.raw, sort_keys=True, indent=2)

    @property
    def hash(self) -> str:
        canon = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:16]

    def scene(self):
        """Instantiate (medium, array, pulse, tau, n) from the config."""
        from .medium import preset_scenario

        refl = self.raw["reflectors"]
        reflectors = ([Reflector.from_dict(r) for r in refl]
                      if refl is not None else None)
        arr = self.raw["array"]
        samp = self.raw["sampling"]
        return preset_scenario(
            self.raw["scenario"], mesh=self.raw["mesh"],
            m=arr.get("m"), aperture=arr.get("aperture"),
            tau_factor=samp.get("tau_factor"), n=samp.get("n"),
            reflectors=reflectors)

    def imaging_grid(self, medium):
        from .medium import ImagingGrid

        img = self.raw["imaging"]
        x = img["x"] if img["x"] is not None else [1.0, medium.width - 1.0]
        z = img["z"] if img["z"] is not None else [1.5, min(9.5, medium.depth - 1.5)]
        return ImagingGrid.aligned(medium, x, z, stride=tuple(img["stride"]))
