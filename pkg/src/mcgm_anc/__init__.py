"""Monte Carlo gradient meta-learning of the FxLMS step size, with a
feedforward active-noise-control simulator and experiment harness."""

__version__ = "0.1.0"

from .errors import DivergenceError, FormatError, InvalidArgumentError, NumericError
from .signals import (ImpulseResponse, Signal, convolve, design_bandpass_fir,
                      gen_synthetic_path, gen_white_noise)
from .plant import Plant, disturbance, filtered_reference, perturb_secondary, synthetic_plant
from .fxlms import (ControlFilter, Fixed, Normalized, RunTrace, StepSizeStrategy, Theoretical,
                    control_output, fxlms_update, run_fxlms, secondary_delay_estimate,
                    theoretical_step_size)
from .trainer import (Task, TrainerConfig, TrainerResult, input_vector, make_task, sgd_step,
                      train, unroll_task)
from .harness import (ComparisonReport, NrSeries, broadband_dataset, compare_strategies,
                      noise_reduction_level, robustness_sweep, split_dataset)

__all__ = [
    "DivergenceError", "FormatError", "InvalidArgumentError", "NumericError",
    "ImpulseResponse", "Signal", "convolve", "design_bandpass_fir", "gen_synthetic_path",
    "gen_white_noise",
    "Plant", "disturbance", "filtered_reference", "perturb_secondary", "synthetic_plant",
    "ControlFilter", "Fixed", "Normalized", "RunTrace", "StepSizeStrategy", "Theoretical",
    "control_output", "fxlms_update", "run_fxlms", "secondary_delay_estimate",
    "theoretical_step_size",
    "Task", "TrainerConfig", "TrainerResult", "input_vector", "make_task", "sgd_step", "train",
    "unroll_task",
    "ComparisonReport", "NrSeries", "broadband_dataset", "compare_strategies",
    "noise_reduction_level", "robustness_sweep", "split_dataset",
]
