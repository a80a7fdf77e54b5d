"""Control generation and simulation for loop programs on processor arrays."""
from .model import LoopProgram, parse_program
from .pipeline import Compiled, compile_program

__all__ = ["Compiled", "LoopProgram", "compile_program", "parse_program"]
__version__ = "0.1.0"
