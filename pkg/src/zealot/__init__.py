"""Zealot voter model on trees: simulators, the COBRA dual and threshold calculators."""

from .cobra import (
    BrwTrajectory,
    ParticleTrajectory,
    PopulationOverflow,
    PrecisionError,
    TaggedWalk,
    brw_mean_occupancy_root,
    cobra_survival_probability,
    coalescence_probability,
    local_survival_frequency,
    simulate_brw,
    simulate_cobra,
    tagged_particle_walk,
)
from .forward import ForwardTrajectory, root_occupation_frequency, simulate_forward, survival_probability
from .graphical import (
    Event,
    EventLog,
    check_additivity,
    check_duality,
    dual_state,
    forward_state,
    sample_event_log,
)
from .harness import ExperimentConfig, ResultRecord, replicate_seeds, run, sweep
from .kernels import BACKEND
from .model import Estimate, ModelParams
from .thresholds import NuReport, PerturbationInputs, ThresholdReport, classify, nu0
from .trees import (
    DegreeDist,
    Tree,
    TreeSpec,
    TruncationError,
    build_regular_tree,
    frontier_sets,
    level,
    sample_gw_tree,
)

__version__ = "0.1.0"
