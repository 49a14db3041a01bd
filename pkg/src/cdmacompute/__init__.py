"""Over-the-air computation of binary functions on a CDMA multiple-access channel."""

from .gf2 import BitMatrix, BitVector
from .function_space import Partition, TruthTable
from .source import BscStar, JointPmf

__version__ = "0.1.0"

__all__ = ["BitMatrix", "BitVector", "BscStar", "JointPmf", "Partition", "TruthTable"]
