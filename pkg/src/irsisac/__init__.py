"""Target detection, angle estimation and ISAC design for IRS-assisted radar."""

from .beamforming import (BeamformingSolution, ao_crb_min, optimal_los_detection,
                          project_gains, project_trace_psd)
from .config import ExperimentConfig, Preset, parse_config
from .detection import (DetectionOutcome, active_np_statistic, glrt_statistic, pd_closed_form,
                        simulate_detection)
from .errors import ConfigError, InfeasibleError, InvalidArgumentError, SingularFIMError
from .estimation import (FimRecord, angle_information, crb_angle, fim_point_target, mle_angle,
                         numeric_fim)
from .experiments import MetricRecord, format_csv, run_experiment, write_csv
from .isac import (IsacTransmit, ParetoPoint, Receiver, comm_snr, pareto_sweep,
                   snr_max_under_crb)
from .model import (Architecture, ChannelSet, Geometry, PathLossModel, ReflectPattern,
                    SystemConfig, TargetResponse, TransmitCovariance, steering_derivative,
                    steering_vector)
from .snr import sensing_snr, signal_snr
from .specfun import marcum_q, nc_chi2_isf, nc_chi2_sf

__all__ = [
    "Architecture", "BeamformingSolution", "ChannelSet", "ConfigError", "DetectionOutcome",
    "ExperimentConfig", "FimRecord", "Geometry", "InfeasibleError", "InvalidArgumentError",
    "IsacTransmit", "MetricRecord", "ParetoPoint", "PathLossModel", "Preset", "Receiver",
    "ReflectPattern", "SingularFIMError", "SystemConfig", "TargetResponse",
    "TransmitCovariance", "active_np_statistic", "angle_information", "ao_crb_min", "comm_snr",
    "crb_angle", "fim_point_target", "format_csv", "glrt_statistic", "marcum_q", "mle_angle",
    "nc_chi2_isf", "nc_chi2_sf", "numeric_fim", "optimal_los_detection", "pareto_sweep",
    "parse_config", "pd_closed_form", "project_gains", "project_trace_psd", "run_experiment", "sensing_snr",
    "signal_snr", "simulate_detection", "snr_max_under_crb", "steering_derivative",
    "steering_vector", "write_csv",
]
