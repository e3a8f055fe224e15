"""
Deterministic JSON and CSV rendering.

Floats are written with 17 significant digits; non-finite floats become
the strings "inf", "-inf" and "nan". Key order follows insertion order.
"""

import json
import math
from enum import Enum
from typing import Any, Dict

import numpy as np
import pandas as pd

from app.core.errors import ExtremalError, NonMonotone, ParseError
from app.core.extremal import ExtremalSolution, RadialProfile
from app.core.metric import AnnulusPair, MetricSpec, Weights

FLOAT_FORMAT = ".17g"
PROFILE_COLUMNS = ["t", "H", "Hdot"]


def format_float(value: float) -> str:
    if math.isnan(value):
        return '"nan"'
    if math.isinf(value):
        return '"inf"' if value > 0 else '"-inf"'
    return format(value, FLOAT_FORMAT)


def _plain(obj: Any) -> Any:
    if hasattr(obj, "to_dict") and not isinstance(obj, pd.DataFrame):
        return obj.to_dict()
    if isinstance(obj, pd.DataFrame):
        return obj.to_dict(orient="records")
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, Enum):
        return obj.value
    return obj


def _encode(obj: Any, indent: int, level: int) -> str:
    obj = _plain(obj)
    pad = " " * (indent * (level + 1))
    close = " " * (indent * level)

    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(key))}: {_encode(value, indent, level + 1)}" for key, value in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + close + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(_plain(item), (int, float)) and not isinstance(item, bool) for item in obj):
            return "[" + ", ".join(_encode(item, indent, level + 1) for item in obj) + "]"
        items = [pad + _encode(item, indent, level + 1) for item in obj]
        return "[\n" + ",\n".join(items) + "\n" + close + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def to_json(obj: Any, indent: int = 2) -> str:
    """Render any result object, dict, list or DataFrame as JSON text"""
    return _encode(obj, indent, 0) + "\n"


def profile_to_frame(p: RadialProfile) -> pd.DataFrame:
    return pd.DataFrame({"t": p.t_samples, "H": p.H_samples, "Hdot": p.Hdot_samples}, columns=PROFILE_COLUMNS)


def frame_to_csv(frame: pd.DataFrame) -> str:
    return frame.to_csv(index=False, float_format="%.17g")


def profile_from_frame(frame: pd.DataFrame) -> RadialProfile:
    missing = {"t", "H"} - set(frame.columns)
    if missing:
        raise ParseError("profile table must have columns t,H[,Hdot]", {"missing": sorted(missing)})
    try:
        t = frame["t"].astype(float).to_numpy()
        H = frame["H"].astype(float).to_numpy()
        Hdot = frame["Hdot"].astype(float).to_numpy() if "Hdot" in frame.columns else None
    except ValueError as exc:
        raise ParseError(f"profile table is not numeric: {exc}") from exc
    if len(t) < 2:
        raise NonMonotone("profile table needs at least two rows")
    return RadialProfile.from_samples(t, H, Hdot)


def load_profile_csv(path: str) -> RadialProfile:
    """Read a profile CSV with header t,H,Hdot"""
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except (OSError, ValueError, pd.errors.ParserError) as exc:
        raise ParseError(f"cannot read profile: {exc}", {"path": path}) from exc
    return profile_from_frame(frame)


def profile_document(sol: ExtremalSolution) -> Dict[str, Any]:
    """JSON document of a solved instance: parameters, alpha and the profile samples"""
    doc = sol.to_dict(include_samples=False)
    doc["profile"] = {
        "t": sol.profile.t_samples.tolist(),
        "H": sol.profile.H_samples.tolist(),
        "Hdot": sol.profile.Hdot_samples.tolist(),
    }
    return doc


def load_profile_document(doc: Dict[str, Any]) -> Dict[str, Any]:
    """Inverse of ``profile_document``; returns metric, weights, annulus, alpha and profile"""
    try:
        samples = doc["profile"]
        t = np.array([float(v) for v in samples["t"]])
        H = np.array([float(v) for v in samples["H"]])
        Hdot = np.array([float(v) for v in samples["Hdot"]])
        ann = AnnulusPair(float(doc["r"]), float(doc["R"]))
        result = {
            "metric": MetricSpec.parse(doc["metric"]),
            "weights": Weights(float(doc["a"]), float(doc["b"])),
            "annulus": ann,
            "alpha": float(doc["alpha"]),
        }
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ExtremalError):
            raise
        raise ParseError(f"malformed profile document: {exc}") from exc
    result["profile"] = RadialProfile(t, H, Hdot, r=ann.r, R=ann.R)
    return result


def load_profile(path: str) -> RadialProfile:
    """Profile from a ``.json`` solve document or a ``t,H,Hdot`` CSV"""
    if not path.lower().endswith(".json"):
        return load_profile_csv(path)
    try:
        with open(path) as handle:
            doc = json.load(handle)
    except (OSError, ValueError) as exc:
        raise ParseError(f"cannot read profile document: {exc}", {"path": path}) from exc
    return load_profile_document(doc)["profile"]
