"""Cycle-level models of the global controller, delay network and FU sequencers."""
from .delay import DelayElement, DelayModel, FifoOverflow, run_delay
from .gc import ControlTrace, Scanner, SimError, run_gc
from .reference import reference_interpret
from .sequencer import ControlInstruction, Instruction, Memories, assemble, default_horizon, run_array
from .trace import ExecTrace

__all__ = [
    "ControlInstruction",
    "ControlTrace",
    "DelayElement",
    "DelayModel",
    "ExecTrace",
    "FifoOverflow",
    "Instruction",
    "Memories",
    "Scanner",
    "SimError",
    "assemble",
    "default_horizon",
    "reference_interpret",
    "run_array",
    "run_delay",
    "run_gc",
]
