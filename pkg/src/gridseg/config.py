"""Flat key-value configuration files and override resolution.

The file format is one ``key: value`` (or ``key=value``) pair per line with
``#`` comments.  ``cellSizeZ`` takes the Phase-I and Phase-II heights as two
comma-separated values; parenthesized annotations like ``(Phase I)`` are
tolerated, so a verbatim published parameter block parses as-is.  Flag
overrides take precedence over the config file, which takes precedence over
the built-in defaults.
"""

from __future__ import annotations

import os
from dataclasses import replace
from pathlib import Path

from .errors import ConfigError
from .pipeline import PipelineConfig, make_default_config
from .voxel_grid import CellSize

ENV_CONFIG_PATH = "GRIDSEG_CONFIG"

# key order matches the published parameter block, spec-added keys after
KEY_ORDER = [
    "distToGround",
    "robotRadius",
    "cellSizeX",
    "cellSizeY",
    "cellSizeZ",
    "slopeThresholdDegrees",
    "groundInlierThreshold",
    "centroidSearchRadius",
    "lineRatioMin",
    "lineCrossRatioMax",
    "planarFlatnessMax",
    "ransacIterations",
    "ambiguityElevationThreshold",
    "sparsityLowMax",
    "sparsityMediumMax",
    "expansionHeightGate",
    "globalSeed",
    "seedSpacing",
]

_INT_KEYS = {"ransacIterations", "globalSeed"}


def _strip_annotations(value: str) -> str:
    out = []
    depth = 0
    for ch in value:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth = max(0, depth - 1)
        elif depth == 0:
            out.append(ch)
    return "".join(out)


def parse_value(key: str, raw: str):
    raw = raw.strip()
    if key not in KEY_ORDER:
        raise ConfigError(f"unknown configuration key: {key}")
    if key == "cellSizeZ":
        parts = [p.strip() for p in _strip_annotations(raw).split(",") if p.strip()]
        if len(parts) != 2:
            raise ConfigError("cellSizeZ needs two values: Phase I and Phase II heights")
        try:
            return (float(parts[0]), float(parts[1]))
        except ValueError as exc:
            raise ConfigError(f"bad value for cellSizeZ: {raw}") from exc
    try:
        if key in _INT_KEYS:
            return int(raw)
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw}") from exc


def parse_config_text(text: str) -> dict:
    settings = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        sep = ":" if ":" in line else "="
        if sep not in line:
            raise ConfigError(f"line {lineno}: expected 'key: value', got {line!r}")
        key, raw = line.split(sep, 1)
        settings[key.strip()] = parse_value(key.strip(), raw)
    return settings


def load_config_file(path: str | Path) -> dict:
    return parse_config_text(Path(path).read_text())


def parse_overrides(pairs: list[str]) -> dict:
    settings = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"override must be key=value, got {pair!r}")
        key, raw = pair.split("=", 1)
        settings[key.strip()] = parse_value(key.strip(), raw)
    return settings


def apply_settings(cfg: PipelineConfig, settings: dict) -> PipelineConfig:
    """Return a new config with the given flat settings applied to both phases."""
    geo1, geo2 = cfg.phase1.geometry, cfg.phase2.geometry
    exp1, exp2 = cfg.phase1.expansion, cfg.phase2.expansion
    cs1, cs2 = cfg.phase1.cellsize, cfg.phase2.cellsize
    top = {}

    geo_map = {
        "slopeThresholdDegrees": "slope_threshold_deg",
        "groundInlierThreshold": "inlier_threshold",
        "lineRatioMin": "line_ratio_min",
        "lineCrossRatioMax": "line_cross_ratio_max",
        "planarFlatnessMax": "planar_flatness_max",
        "ransacIterations": "ransac_iterations",
        "sparsityLowMax": "sparsity_low_max",
        "sparsityMediumMax": "sparsity_medium_max",
    }
    exp_map = {
        "centroidSearchRadius": "search_radius",
        "expansionHeightGate": "height_gate",
        "ambiguityElevationThreshold": "ambiguity_elevation_threshold",
    }
    top_map = {
        "distToGround": "dist_to_ground",
        "robotRadius": "robot_radius",
        "globalSeed": "global_seed",
        "seedSpacing": "seed_spacing",
    }

    for key, value in settings.items():
        if key in geo_map:
            geo1 = replace(geo1, **{geo_map[key]: value})
            geo2 = replace(geo2, **{geo_map[key]: value})
        elif key in exp_map:
            exp1 = replace(exp1, **{exp_map[key]: value})
            exp2 = replace(exp2, **{exp_map[key]: value})
        elif key in top_map:
            top[top_map[key]] = value
        elif key == "cellSizeX":
            cs1 = CellSize(value, cs1.sy, cs1.sz)
            cs2 = CellSize(value, cs2.sy, cs2.sz)
        elif key == "cellSizeY":
            cs1 = CellSize(cs1.sx, value, cs1.sz)
            cs2 = CellSize(cs2.sx, value, cs2.sz)
        elif key == "cellSizeZ":
            z1, z2 = value
            cs1 = CellSize(cs1.sx, cs1.sy, z1)
            cs2 = CellSize(cs2.sx, cs2.sy, z2)
        else:
            raise ConfigError(f"unknown configuration key: {key}")

    return replace(
        cfg,
        phase1=replace(cfg.phase1, cellsize=cs1, geometry=geo1, expansion=exp1),
        phase2=replace(cfg.phase2, cellsize=cs2, geometry=geo2, expansion=exp2),
        **top,
    )


def resolve_config(config_path: str | None, overrides: list[str] | None) -> PipelineConfig:
    """Defaults <- config file (flag or env var) <- key=value overrides."""
    cfg = make_default_config()
    path = config_path or os.environ.get(ENV_CONFIG_PATH)
    if path:
        cfg = apply_settings(cfg, load_config_file(path))
    if overrides:
        cfg = apply_settings(cfg, parse_overrides(overrides))
    return cfg


def dump_config(cfg: PipelineConfig) -> str:
    """Render the effective configuration in the flat key format."""
    geo = cfg.phase1.geometry
    exp = cfg.phase1.expansion
    values = {
        "distToGround": f"{cfg.dist_to_ground:g}",
        "robotRadius": f"{cfg.robot_radius:g}",
        "cellSizeX": f"{cfg.phase1.cellsize.sx:g}",
        "cellSizeY": f"{cfg.phase1.cellsize.sy:g}",
        "cellSizeZ": f"{cfg.phase1.cellsize.sz:g} (Phase I), {cfg.phase2.cellsize.sz:g} (Phase II)",
        "slopeThresholdDegrees": f"{geo.slope_threshold_deg:g}",
        "groundInlierThreshold": f"{geo.inlier_threshold:g}",
        "centroidSearchRadius": f"{exp.search_radius:g}",
        "lineRatioMin": f"{geo.line_ratio_min:g}",
        "lineCrossRatioMax": f"{geo.line_cross_ratio_max:g}",
        "planarFlatnessMax": f"{geo.planar_flatness_max:g}",
        "ransacIterations": f"{geo.ransac_iterations:d}",
        "ambiguityElevationThreshold": f"{exp.ambiguity_elevation_threshold:g}",
        "sparsityLowMax": f"{geo.sparsity_low_max:g}",
        "sparsityMediumMax": f"{geo.sparsity_medium_max:g}",
        "expansionHeightGate": f"{exp.height_gate:g}",
        "globalSeed": f"{cfg.global_seed:d}",
        "seedSpacing": f"{cfg.seed_spacing:g}",
    }
    return "\n".join(f"{key}: {values[key]}" for key in KEY_ORDER) + "\n"
