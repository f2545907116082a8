"""Local inference service: masked-token scoring and sentence embedding over HTTP."""

from .app import create_app
from .bundle import ModelBundle, RealModelBundle
from .config import SidecarConfig, load_config

__version__ = "0.1.0"

__all__ = ["ModelBundle", "RealModelBundle", "SidecarConfig", "create_app", "load_config"]
