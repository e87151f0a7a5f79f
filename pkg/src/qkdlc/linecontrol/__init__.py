"""Physical line control: transmittometry and reflectometry."""
from .io import load_reflectogram, save_reflectogram
from .reflectometry import (
    BaselineFit,
    Detection,
    EventKind,
    FiberEvent,
    Reflectogram,
    detect_new_events,
    fit_baseline,
    inject_events,
    synthesize_reflectogram,
)
from .transmittometry import (
    LeakEstimate,
    TestPulsePlan,
    estimate_leakage,
    min_detectable_leakage,
    required_test_intensity,
)

__all__ = [
    "BaselineFit",
    "Detection",
    "EventKind",
    "FiberEvent",
    "LeakEstimate",
    "Reflectogram",
    "TestPulsePlan",
    "detect_new_events",
    "estimate_leakage",
    "fit_baseline",
    "inject_events",
    "load_reflectogram",
    "min_detectable_leakage",
    "required_test_intensity",
    "save_reflectogram",
    "synthesize_reflectogram",
]
