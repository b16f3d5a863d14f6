from .image import RegisterImage
from .regmap import REGISTER_MAPS, PlcMap, render_register_docs
from .runtime import ActuatorImage, PlcInstance

__all__ = [
    "RegisterImage",
    "REGISTER_MAPS",
    "PlcMap",
    "render_register_docs",
    "ActuatorImage",
    "PlcInstance",
]
