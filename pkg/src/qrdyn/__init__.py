"""Zorich-type quasiregular maps in R^3 and numerical checks of their
Julia limiting directions."""
from .maps import (
    ComposedMap,
    ConjugatedMap,
    GluedMap,
    IdentityMap,
    NSMap,
    Ramp,
    ScalingMap,
    SectorMap,
    ZorichMap,
    map_from_config,
)

__version__ = "0.1.0"

__all__ = [
    "ComposedMap", "ConjugatedMap", "GluedMap", "IdentityMap", "NSMap", "Ramp",
    "ScalingMap", "SectorMap", "ZorichMap", "map_from_config", "__version__",
]
