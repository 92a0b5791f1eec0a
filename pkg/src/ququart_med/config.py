"""Run configuration files and the built-in presets.

A config is an INI file. Angles are in degrees, reflectivities, losses and
leakages are fractions. Unknown sections or keys are rejected; anything left
out falls back to the base preset (``[run] preset``, ``ideal`` by default).

    [run]
    preset = paper

    [receiver]
    n_passes = 4
    phase1 = 0.0          ; degrees
    ; prep_q1 .. loop_q2 override single plate angles (degrees); when
    ; omitted the preset's calibrated angles are kept

    [beam_splitter]
    r_h = 0.26
    r_v = 0.29
    loss_bs = 0.21
    loss_loop = 0.11

    [vbg]
    ext_h = 0.0125
    ext_v = 0.0055

    [timing]
    l_loop1 = 0.9         ; meters
    l_loop2 = 0.45
    rep_rate = 80e6       ; Hz

    [montecarlo]
    sigma_angle = 1.0     ; degrees
    sigma_r = 0.02
    n_samples = 1000
    seed = 0
    distribution = gaussian
"""

import configparser
import dataclasses
import os
from dataclasses import dataclass, field

import numpy as np

from .calibration import default_calibration, paper_params
from .components import BSParams, ReceiverParams, TimingConfig, VBGParams, WaveplateSet
from .montecarlo import UncertaintyModel

PRESETS = {
    "ideal": default_calibration,
    "paper": paper_params,
}

_SCHEMA = {
    "run": {"preset": str, "ensemble": str, "out_dir": str},
    "receiver": {
        "n_passes": int,
        "prep_q1": float, "prep_h": float, "prep_q2": float,
        "loop_q1": float, "loop_h": float, "loop_q2": float,
        "phase1": float, "phase2": float,
    },
    "beam_splitter": {"r_h": float, "r_v": float, "loss_bs": float, "loss_loop": float},
    "vbg": {"ext_h": float, "ext_v": float},
    "timing": {"l_loop1": float, "l_loop2": float, "rep_rate": float},
    "montecarlo": {
        "sigma_angle": float, "sigma_r": float, "n_samples": int, "seed": int, "distribution": str,
    },
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    params: ReceiverParams
    timing: TimingConfig = field(default_factory=TimingConfig)
    uncertainty: UncertaintyModel = field(default_factory=UncertaintyModel)
    preset: str = "ideal"
    ensemble: str = "canonical"
    out_dir: str = None


def preset_params(name):
    try:
        return PRESETS[name]()
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def _typed(section, key, raw):
    kind = _SCHEMA[section][key]
    try:
        return kind(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r} as {kind.__name__}") from None


def load_config(path=None, preset=None):
    """Build a :class:`RunConfig` from an INI file on top of a preset.

    ``preset`` given here overrides ``[run] preset`` in the file.
    """
    values = {}
    if path is not None:
        if not os.path.isfile(path):
            raise ConfigError(f"config file not found: {path}")
        cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        try:
            cp.read(path, encoding="utf-8")
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from None
        for section in cp.sections():
            if section not in _SCHEMA:
                raise ConfigError(f"unknown section [{section}]")
            for key, raw in cp.items(section):
                if key not in _SCHEMA[section]:
                    raise ConfigError(f"unknown key {key!r} in [{section}]")
                values[(section, key)] = _typed(section, key, raw)

    def get(section, key, default):
        return values.get((section, key), default)

    base_name = preset or get("run", "preset", "ideal")
    base = preset_params(base_name)
    ensemble = get("run", "ensemble", "canonical")
    if ensemble != "canonical":
        raise ConfigError(f"unknown ensemble {ensemble!r}")

    prep = base.prep_set.to_degrees()
    loop = base.loop_set.to_degrees()
    try:
        params = ReceiverParams(
            prep_set=WaveplateSet.from_degrees(*(get("receiver", f"prep_{k}", prep[k]) for k in ("q1", "h", "q2"))),
            loop_set=WaveplateSet.from_degrees(*(get("receiver", f"loop_{k}", loop[k]) for k in ("q1", "h", "q2"))),
            phase1=float(np.radians(get("receiver", "phase1", np.degrees(base.phase1)))),
            phase2=float(np.radians(get("receiver", "phase2", np.degrees(base.phase2)))),
            bs=BSParams(**{k: get("beam_splitter", k, getattr(base.bs, k)) for k in ("r_h", "r_v", "loss_bs", "loss_loop")}),
            vbg=VBGParams(**{k: get("vbg", k, getattr(base.vbg, k)) for k in ("ext_h", "ext_v")}),
            n_passes=get("receiver", "n_passes", base.n_passes),
        )
        timing = TimingConfig(**{k: get("timing", k, getattr(TimingConfig(), k)) for k in ("l_loop1", "l_loop2", "rep_rate")})
        defaults = UncertaintyModel()
        uncertainty = UncertaintyModel(
            **{f.name: get("montecarlo", f.name, getattr(defaults, f.name)) for f in dataclasses.fields(UncertaintyModel)}
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return RunConfig(params, timing, uncertainty, base_name, ensemble, get("run", "out_dir", None))
