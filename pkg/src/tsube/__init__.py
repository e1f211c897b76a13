"""Two-scale UE scheduling, beamforming and energy exchange for grid-powered cellular networks."""

from .baselines import wolpe_slot, zf_directions, zfbf_slot
from .config import SimConfig, default_config, load_config
from .controller import FrameSchedule, LyapunovConfig, drift_terms, lyapunov_value, schedule_frame
from .energy import EnergyPrices, ExchangePlan, grid_expenditure, net_exchange
from .errors import ConfigError, ContractViolation, InfeasibleError, NullSpaceError, SolverError
from .metrics import TraceRecord, annualize, little_delay, moving_average
from .model import ChannelRealization, Topology, draw_channels, pathloss_db, rate, sinr
from .queueing import QueueState, TrafficSpec
from .sim import run, simulate, summarize
from .slot_solver import (
    PerSlotProblem,
    SlotDecision,
    exchange_only,
    f_phi,
    search_phi,
    solve_fixed_phi,
    tsube_slot,
)

__version__ = "0.1.0"
