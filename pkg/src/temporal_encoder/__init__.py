"""Temporal neuromorphic image encoder.

Pixels map to an input voltage, a subthreshold excitatory current and, per
neuron branch, an integrating time; adjacent branches fire with an
inter-spike interval that grows exponentially with pixel intensity.
"""

from .codec import (
    DeviationReport,
    EncodedImage,
    ImageU8,
    all_values_card,
    decode_image,
    deviation_summary,
    encode_image,
    sweep_intervals,
)
from .model import (
    Branch,
    BranchSet,
    DeviceParams,
    decode_pixel_from_interval,
    excitatory_current,
    excitatory_current_from_pixel,
    input_voltage_to_pixel,
    integrating_time,
    intermediate_potential,
    interspike_interval_analytic,
    pixel_to_input_voltage,
    validate_params,
)
from .power import PowerModel, image_power_report, power_of_pixel
from .simulator import (
    MembraneState,
    SimConfig,
    SpikeEvent,
    SpikeTrain,
    measure_intervals,
    simulate_branch,
    simulate_pixel,
    step_membrane,
)

__version__ = "0.1.0"
