from ..core.kernels import BACKEND
from .model import (
    VehicleState, autopilot_step, inverse_mix, linear_model, mix_fins, plant_step,
    state_from_kernel, suction_force,
)
from .params import Disturbance, KERNEL_PARAMS, MatchedStep, PlantParams, kernel_params
