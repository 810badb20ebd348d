"""toroflux: solenoidal fields tangent, with their curl, to nested toroidal surfaces."""

from .geometry import (
    Axisym,
    ConjugateHarmonic,
    DisplacedEllipse,
    ExpSheared,
    PhasePerturbed,
    SurfaceFamily,
    ToroidalCoords,
    make_family,
)

__all__ = [
    "Axisym",
    "ConjugateHarmonic",
    "DisplacedEllipse",
    "ExpSheared",
    "PhasePerturbed",
    "SurfaceFamily",
    "ToroidalCoords",
    "make_family",
]

__version__ = "0.1.0"
