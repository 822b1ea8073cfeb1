from .ag import AgParams, fleet_sizes, generate_ag
from .isma import parse_isma, reduce_isma_to_moap
from .rw import RwParams, generate_rw

__all__ = ["AgParams", "RwParams", "fleet_sizes", "generate_ag", "generate_rw", "parse_isma",
           "reduce_isma_to_moap"]
