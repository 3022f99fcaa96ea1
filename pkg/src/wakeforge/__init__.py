"""wakeforge: neural surrogate wake modelling, multi-fidelity transfer
learning and wind-farm yaw/layout optimization."""

__version__ = "0.1.0"

from .turbine import (FarmLayout, FlowConditions, TurbineSpec,
                      default_turbine_spec, interp_ct, interp_cp,
                      local_ti_oracle, turbine_power)
from .wakes import (CurlSolverConfig, GaussianParams, WakeField,
                    curl_wake_tile, deflection_offset, expansion_K,
                    gaussian_deficit, gaussian_wake_tile)
from .superposition import (FarmFlowField, assemble_farm_flow, hub_speed,
                            rotor_line_sample, sos_combine)
from .dataset import WakeDataset, generate_dataset, load_dataset, sample_conditions, save_dataset
from .network import (NetworkModel, TrainConfig, accuracy, build_decoder,
                      build_predictor, ddn_forward, fine_tune, freeze_layers,
                      gradient_check, load_model, power_net_forward,
                      save_model, ti_net_forward, train)
