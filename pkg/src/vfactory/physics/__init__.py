from .cylinders import Cylinder, CylinderRegistry
from .params import PhysicsParams
from .base import SensorFrame, sensor_schema, frame_sensor_names
from .gripper import GripperStation
from .warehouse import WarehouseStation
from .mpu import MpuStation
from .sorting import SortingStation

__all__ = [
    "Cylinder",
    "CylinderRegistry",
    "PhysicsParams",
    "SensorFrame",
    "sensor_schema",
    "frame_sensor_names",
    "GripperStation",
    "WarehouseStation",
    "MpuStation",
    "SortingStation",
]
