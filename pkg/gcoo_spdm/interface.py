import typing
import dataclasses
import enum
import numpy

if typing.TYPE_CHECKING:
    import pathlib
    from ._matrix import (
        CooMatrix,
        DenseMatrix,
    )


class SpdmError(Exception):
    """Base class of every error raised on purpose by this package."""

class ConfigError(SpdmError, ValueError):
    """Invalid parameters, e.g. a group height that is not a power of two."""

class DataError(SpdmError):
    """The data itself is unusable."""

class InvariantError(DataError, ValueError):
    """A matrix does not satisfy the invariants of its storage format."""

class DimensionMismatchError(DataError, ValueError):
    pass

class UndefinedIntensityError(DataError, ZeroDivisionError):
    """Operational intensity requested for a report without DRAM traffic."""

class MatrixFormatError(DataError):
    """Malformed MatrixMarket input."""

    path : str
    line : int | None

    def __init__( self, path : "str | pathlib.Path", line : int | None, message : str ):
        self.path = str(path)
        self.line = line
        location = self.path if line is None else f"{self.path}:{line}"
        super().__init__( f"{location}: {message}" )


class Scalar(enum.Enum):
    F32 = 'f32'
    F64 = 'f64'

    @property
    def dtype(self) -> numpy.dtype:
        return numpy.dtype( numpy.float32 if self is Scalar.F32 else numpy.float64 )

    @staticmethod
    def of( dtype : numpy.dtype ) -> "Scalar":
        dtype = numpy.dtype(dtype)
        if dtype == numpy.float32:
            return Scalar.F32
        if dtype == numpy.float64:
            return Scalar.F64
        raise ConfigError( f"Unsupported element type {dtype}." )

class SparseFormat(enum.Enum):
    CSR = 'csr'
    COO = 'coo'
    GCOO = 'gcoo'

class CacheMode(enum.Enum):
    COLD = 'cold'
    INFINITE_L2 = 'infinite_l2'

class Kernel(enum.Enum):
    ORACLE = 'oracle'
    DENSE = 'dense'
    CSR = 'csr'
    COO = 'coo'
    GCOO = 'gcoo'

class TrafficKernel(enum.Enum):
    GCOO = 'gcoo'
    CSR = 'csr'

class MatrixOrigin(enum.Enum):
    FILE = 'file'
    GENERATED = 'generated'


def is_power_of_two( value : int ) -> bool:
    return value >= 1 and (value & (value - 1)) == 0

def require_power_of_two( name : str, value : int ) -> None:
    if not isinstance( value, (int, numpy.integer) ) or not is_power_of_two( int(value) ):
        raise ConfigError( f"{name} must be a power of two, got {value!r}." )


@dataclasses.dataclass(frozen=True)
class ExecConfig:
    """
    Kernel tiling parameters.

    params:
        p - output tile height, equal to the number of rows per GCOO group
        b - lane-block width: output tile width and staging buffer capacity in COO entries
        workers - concurrent workers, 0 picks the hardware parallelism
        schedule_seed - shuffle the tile list with this seed before distributing it, None keeps row-major tile order
    """
    p : int = 4
    b : int = 64
    workers : int = 0
    schedule_seed : int | None = None

    def __post_init__(self):
        require_power_of_two( "p", self.p )
        require_power_of_two( "b", self.b )
        if self.workers < 0:
            raise ConfigError( f"workers must be >= 0, got {self.workers}." )

    def tile_grid( self, m : int, n : int ) -> tuple[int, int]:
        """Tile counts (row groups, column strips) for an m x k sparse operand times a k x n dense operand."""
        return ( (m + self.p - 1) // self.p, (n + self.b - 1) // self.b )


@dataclasses.dataclass(frozen=True)
class BenchConfiguration:
    repetitions : int = 5
    warmup : int = 2
    seed : int = 1
    scalar : Scalar = Scalar.F32

    def __post_init__(self):
        if self.repetitions < 1:
            raise ConfigError( "At least one timed repetition is required." )
        if self.warmup < 0:
            raise ConfigError( "Warm-up count cannot be negative." )


@dataclasses.dataclass(frozen=True)
class DatasetRules:
    """
    Public-dataset selection rules, defaults are the ones used to pick the square test matrices.

    Ranges are inclusive.
    """
    square_only : bool = True
    min_sparsity : float = 0.98
    max_sparsity : float = 0.999999
    min_dim : int = 64
    max_dim : int = 36720


class MatrixSource(typing.Protocol):
    """A matrix the benchmark harness can load, generated or read from a file."""

    @property
    def name(self) -> str:
        """Label used in result rows."""

    @property
    def shape(self) -> tuple[int, int]:
        """(rows, cols) of the matrix."""

    @property
    def nnz(self) -> int:
        pass

    def dense( self, scalar : Scalar ) -> "DenseMatrix":
        """
        Materialize the matrix in dense form.

        Repeated calls return equal matrices.
        """

    def coo( self, scalar : Scalar ) -> "CooMatrix":
        """Materialize the matrix in COO form."""

    def pattern(self) -> tuple[numpy.ndarray, numpy.ndarray]:
        """
        Coordinates of the nonzeros as (row_idx, col_idx), without materializing values.

        The traffic model only needs this.
        """
