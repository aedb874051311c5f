"""Line-oriented key = value configuration files with sections.

Experiment configs use INI-style sections ([graph], [noise], [run],
[cascade]); parsing is strict and errors carry file/line locations.
"""

from __future__ import annotations

import configparser
from fractions import Fraction

from .cascade import CascadeParams, GraphTemplate
from .errors import ParameterError, ParseError
from .noise import NoiseModel
from .zgraph import ZGraphParams


def read_config(path: str) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh, source=path)
    except FileNotFoundError:
        raise ParseError("no such file", path) from None
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise ParseError(str(exc.message if hasattr(exc, "message") else exc), path, line) from None
    return cp


def _get(cp, section: str, key: str, conv, path: str, default=None):
    if not cp.has_section(section):
        if default is not None:
            return default
        raise ParseError(f"missing section [{section}]", path)
    if not cp.has_option(section, key):
        if default is not None:
            return default
        raise ParseError(f"missing key {key!r} in [{section}]", path)
    raw = cp.get(section, key)
    try:
        return conv(raw)
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"bad value {raw!r} for [{section}] {key}", path) from None


def graph_params_from(cp, path: str, section: str = "graph") -> ZGraphParams:
    kwargs = dict(
        n=_get(cp, section, "n", int, path),
        m=_get(cp, section, "m", int, path),
        delta1=_get(cp, section, "delta1", int, path),
        delta2=_get(cp, section, "delta2", int, path),
    )
    for opt in ("eta1", "eta2", "eps1", "eps2"):
        if cp.has_option(section, opt):
            kwargs[opt] = _get(cp, section, opt, float, path)
    return ZGraphParams(**kwargs)


def noise_model_from(cp, path: str, section: str = "noise") -> NoiseModel:
    kind = _get(cp, section, "kind", str, path)
    if kind == "iid":
        return NoiseModel(kind="iid",
                          p_x=_get(cp, section, "p_x", float, path),
                          p_z=_get(cp, section, "p_z", float, path))
    if kind == "fixed_weight":
        return NoiseModel(kind="fixed_weight",
                          v=_get(cp, section, "v", int, path),
                          t=_get(cp, section, "t", int, path))
    raise ParseError(f"unknown noise kind {kind!r}", path)


def cascade_params_from(cp, path: str, section: str = "cascade"
                        ) -> tuple[CascadeParams, GraphTemplate]:
    params = CascadeParams(
        r1=_get(cp, section, "r1", Fraction, path),
        r2=_get(cp, section, "r2", Fraction, path),
        n0=_get(cp, section, "n0", int, path),
        k=_get(cp, section, "k", int, path),
        master_seed=_get(cp, section, "master_seed", int, path, default=0),
    )
    template = GraphTemplate(
        delta1=_get(cp, section, "delta1", int, path, default=4),
        delta2=_get(cp, section, "delta2", int, path, default=12),
    )
    return params, template


def run_options_from(cp, path: str) -> dict:
    out = {
        "trials": _get(cp, "run", "trials", int, path, default=100),
        "master_seed": _get(cp, "run", "master_seed", int, path, default=0),
        "reducers": ("sequential", "parallel"),
    }
    if cp.has_option("run", "reducers"):
        raw = cp.get("run", "reducers")
        chosen = tuple(x.strip() for x in raw.split(",") if x.strip())
        for c in chosen:
            if c not in ("sequential", "parallel"):
                raise ParseError(f"unknown reducer {c!r}", path)
        out["reducers"] = chosen
    return out
