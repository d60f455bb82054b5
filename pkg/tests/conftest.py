import numpy
import pytest
import hypothesis
from gcoo_spdm import (
    DenseMatrix,
    Scalar,
)

# numba compiles on first call, which would trip the per-example deadline
hypothesis.settings.register_profile( "gcoo_spdm", deadline=None, max_examples=60, derandomize=True )
hypothesis.settings.load_profile( "gcoo_spdm" )

SAMPLE_MATRIX = [
    [7, 0, 0, 8],
    [0, 10, 0, 0],
    [9, 0, 0, 0],
    [0, 0, 6, 3],
]

# relative error bounds against the float64 oracle
TOLERANCE = { Scalar.F32: 1e-5, Scalar.F64: 1e-12 }


@pytest.fixture
def sample_matrix() -> DenseMatrix:
    return DenseMatrix.from_array( numpy.array( SAMPLE_MATRIX, dtype=numpy.float32 ) )

@pytest.fixture(params=list(Scalar), ids=lambda scalar: scalar.value)
def scalar( request ) -> Scalar:
    return request.param


def random_sparse_array( rng : numpy.random.Generator, rows : int, cols : int, s : float, dtype=numpy.float64 ) -> numpy.ndarray:
    """Values uniform in (0, 1] at a random subset of round(rows*cols*(1-s)) cells."""
    array = numpy.zeros( rows * cols, dtype=dtype )
    nnz = int( round( rows * cols * (1.0 - s) ) )
    cells = rng.choice( rows * cols, size=nnz, replace=False )
    array[cells] = 1.0 - rng.random( nnz )
    return array.reshape( rows, cols )

def max_relative_error( result : numpy.ndarray, oracle : numpy.ndarray ) -> float:
    if result.size == 0:
        return 0.0
    result = result.astype( numpy.float64 )
    return float( numpy.max( numpy.abs(result - oracle) / (numpy.abs(oracle) + 1e-30) ) )
