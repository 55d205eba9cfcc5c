"""Optional runtime configuration via the ZEBRA_SONIFY_CONFIG env var.

The variable points at a JSON file overriding guidance thresholds and the
pan law, e.g.::

    {
      "guidance": {"align_angle_threshold_deg": 12, "lateral_margin_m": 0.2},
      "pan_law": {"max_ild_db": 15, "max_itd_ms": 0.8}
    }

Angles are degrees and the ITD is milliseconds in the file (human-friendly
units); unspecified keys keep their defaults.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

from .guidance import GuidanceConfig
from .sonification import PanLaw

ENV_VAR = "ZEBRA_SONIFY_CONFIG"


@dataclass(frozen=True)
class AppConfig:
    guidance: GuidanceConfig
    pan_law: PanLaw


def _guidance_from_dict(d: dict) -> GuidanceConfig:
    base = GuidanceConfig()
    return GuidanceConfig(
        align_angle_threshold=math.radians(
            d.get("align_angle_threshold_deg", math.degrees(base.align_angle_threshold))),
        release_angle_threshold=math.radians(
            d.get("release_angle_threshold_deg", math.degrees(base.release_angle_threshold))),
        lateral_margin=float(d.get("lateral_margin_m", base.lateral_margin)),
        pitch_threshold=math.radians(
            d.get("pitch_threshold_deg", math.degrees(base.pitch_threshold))),
        ahead_max_distance=float(d.get("ahead_max_distance_m", base.ahead_max_distance)),
    )


def _pan_law_from_dict(d: dict) -> PanLaw:
    base = PanLaw()
    return PanLaw(
        max_ild=float(d.get("max_ild_db", base.max_ild)),
        max_itd=float(d.get("max_itd_ms", base.max_itd * 1000.0)) / 1000.0,
    )


def load_app_config(environ=None) -> AppConfig:
    env = os.environ if environ is None else environ
    path = env.get(ENV_VAR, "").strip()
    if not path:
        return AppConfig(GuidanceConfig(), PanLaw())
    with open(path, "r", encoding="utf-8") as f:
        data = json.load(f)
    return AppConfig(
        guidance=_guidance_from_dict(data.get("guidance", {})),
        pan_law=_pan_law_from_dict(data.get("pan_law", {})),
    )
