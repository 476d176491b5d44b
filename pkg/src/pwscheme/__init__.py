"""Exact verification lab for the 4-class scheme on the outer points of Q(5,q)."""

from .geometry import build_model
from .pipeline import RunConfig, run_pipeline
from .scheme import AssociationScheme, build_pw_scheme, load_scheme, save_scheme

__all__ = ["AssociationScheme", "RunConfig", "build_model", "build_pw_scheme", "load_scheme",
           "run_pipeline", "save_scheme"]
__version__ = "0.1.0"
