"""Wave-based gesture recognition from small-aperture backscattering data.

Forward solvers (sound-soft BEM, penetrable Lippmann-Schwinger), analytic
oracles, far-field dictionary tables and the two-stage location/shape
recognition algorithm.
"""
from .geometry import (
    Dictionary, FieldSamples, MeasurementGrid, Medium, PolycubeShape, SamplingRegion,
    Scatterer, SoundSoft, WaveNumber, build_dictionary, fundamental_solution, plane_wave,
)
from .recognition import (
    LocationResult, ShapeScores, classify, indicator_location, indicator_shape, locate,
)
from .tables import AngleMesh, FarFieldTable, build_table, load_table, save_table

__version__ = "0.1.0"

__all__ = [
    "AngleMesh", "Dictionary", "FarFieldTable", "FieldSamples", "LocationResult",
    "MeasurementGrid", "Medium", "PolycubeShape", "SamplingRegion", "Scatterer", "ShapeScores",
    "SoundSoft", "WaveNumber", "build_dictionary", "build_table", "classify",
    "fundamental_solution", "indicator_location", "indicator_shape", "load_table", "locate",
    "plane_wave", "save_table",
]
