"""Python access to the fractalvec core."""

import json

from ._fractalvec import (  # noqa: F401
    CellMeasure,
    EnergyForm,
    FractalvecError,
    LevelGraph,
    SpectrumResult,
    build_level,
    config_hash,
    energy,
    energy_measure,
    gradient_norm_squared,
    harmonic_coordinates,
    harmonic_extension,
    kusuoka_measure,
    kusuoka_statistics,
    p_energy,
    poincare_constant,
    run_invariants,
    self_similar_measure,
    simulate,
    solve_p_laplace,
    spectrum,
    vertex_weights,
)
from ._fractalvec import resolve_config as _resolve_config


def resolve_config(config=None):
    """Validate a config dict against the defaults and return the expanded dict."""
    return json.loads(_resolve_config(json.dumps(config or {})))
