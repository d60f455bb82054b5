import dataclasses
import logging
import numpy
from .interface import (
    Scalar,
    SparseFormat,
    InvariantError,
    require_power_of_two,
)
from .utility import (
    WorkerPool,
)
from . import _kernels

_logger = logging.getLogger(__name__)

INDEX_DTYPE = numpy.dtype( numpy.int64 )


def _read_only( array, dtype : numpy.dtype | None = None ) -> numpy.ndarray:
    """Contiguous read-only view, the caller's array keeps its own flags."""
    array = numpy.ascontiguousarray( array, dtype=dtype )
    if array.flags.writeable:
        array = array.view()
        array.flags.writeable = False
    return array

def _index_array( array ) -> numpy.ndarray:
    array = numpy.asarray( array )
    if array.size and not numpy.issubdtype( array.dtype, numpy.integer ):
        raise InvariantError( f"Index arrays must be integral, got {array.dtype}." )
    return _read_only( array, INDEX_DTYPE )

def _value_array( array ) -> numpy.ndarray:
    array = numpy.asarray( array )
    if array.dtype not in (numpy.float32, numpy.float64):
        array = array.astype( numpy.float64 )
    return _read_only( array )

def _check_dims( rows_dim : int, cols_dim : int ) -> None:
    if rows_dim < 1 or cols_dim < 1:
        raise InvariantError( f"Matrix dimensions must be positive, got {rows_dim}x{cols_dim}." )

def _check_coordinates( row_idx : numpy.ndarray, col_idx : numpy.ndarray, rows_dim : int, cols_dim : int ) -> None:
    if row_idx.size == 0:
        return
    if row_idx.min() < 0 or row_idx.max() >= rows_dim or col_idx.min() < 0 or col_idx.max() >= cols_dim:
        raise InvariantError( f"Coordinates outside the {rows_dim}x{cols_dim} matrix." )

def _check_strictly_increasing( keys : numpy.ndarray, what : str ) -> None:
    if keys.size > 1 and not numpy.all( numpy.diff(keys) > 0 ):
        raise InvariantError( f"Entries must be sorted {what} without duplicate coordinates." )


@dataclasses.dataclass(frozen=True, eq=False)
class DenseMatrix:
    """Row-major dense matrix, data holds rows*cols elements."""
    rows : int
    cols : int
    data : numpy.ndarray

    def __post_init__(self):
        _check_dims( self.rows, self.cols )
        data = numpy.asarray( self.data )
        Scalar.of( data.dtype )
        if data.ndim != 1 or data.size != self.rows * self.cols:
            raise InvariantError( f"Dense data holds {data.size} elements, expected {self.rows}x{self.cols}." )
        object.__setattr__( self, "data", _read_only(data) )

    @staticmethod
    def from_array( array, scalar : Scalar | None = None ) -> "DenseMatrix":
        array = numpy.asarray( array )
        if array.ndim == 1:
            array = array.reshape( 1, -1 )
        if array.ndim != 2:
            raise InvariantError( f"Expected a 2-D array, got {array.ndim} dimensions." )
        dtype = scalar.dtype if scalar is not None else (array.dtype if array.dtype in (numpy.float32, numpy.float64) else Scalar.F32.dtype)
        return DenseMatrix( rows=array.shape[0], cols=array.shape[1], data=numpy.ascontiguousarray(array, dtype=dtype).reshape(-1) )

    @staticmethod
    def zeros( rows : int, cols : int, scalar : Scalar = Scalar.F32 ) -> "DenseMatrix":
        return DenseMatrix( rows=rows, cols=cols, data=numpy.zeros(rows * cols, dtype=scalar.dtype) )

    @staticmethod
    def identity( size : int, scalar : Scalar = Scalar.F32 ) -> "DenseMatrix":
        return DenseMatrix.from_array( numpy.eye(size), scalar )

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    @property
    def scalar(self) -> Scalar:
        return Scalar.of( self.data.dtype )

    @property
    def array(self) -> numpy.ndarray:
        """Read-only 2-D view of data."""
        return self.data.reshape( self.rows, self.cols )

    def astype( self, scalar : Scalar ) -> "DenseMatrix":
        if scalar is self.scalar:
            return self
        return DenseMatrix( rows=self.rows, cols=self.cols, data=self.data.astype(scalar.dtype) )

    def equals( self, other : "DenseMatrix" ) -> bool:
        """
        Bitwise element equality including the element type.

        Sparse formats store only elements that compare unequal to zero, so -0.0 comes back from any
        sparse round trip as +0.0 and this comparison reports the difference.
        """
        return (
            self.shape == other.shape
            and
            self.data.dtype == other.data.dtype
            and
            numpy.array_equal( self.data.view(numpy.uint8), other.data.view(numpy.uint8) )
        )


@dataclasses.dataclass(frozen=True, eq=False)
class CooMatrix:
    """Coordinate format with entries in row-major scan order."""
    rows_dim : int
    cols_dim : int
    values : numpy.ndarray
    row_idx : numpy.ndarray
    col_idx : numpy.ndarray

    def __post_init__(self):
        object.__setattr__( self, "values", _value_array(self.values) )
        object.__setattr__( self, "row_idx", _index_array(self.row_idx) )
        object.__setattr__( self, "col_idx", _index_array(self.col_idx) )
        self.validate()

    def validate(self) -> None:
        _check_dims( self.rows_dim, self.cols_dim )
        if not (self.values.ndim == self.row_idx.ndim == self.col_idx.ndim == 1):
            raise InvariantError( "COO arrays must be one-dimensional." )
        if not (len(self.values) == len(self.row_idx) == len(self.col_idx)):
            raise InvariantError( "COO arrays must have identical lengths." )
        _check_coordinates( self.row_idx, self.col_idx, self.rows_dim, self.cols_dim )
        _check_strictly_increasing( self.row_idx * self.cols_dim + self.col_idx, "row-major" )

    @property
    def nnz(self) -> int:
        return len(self.values)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows_dim, self.cols_dim)

    @property
    def scalar(self) -> Scalar:
        return Scalar.of( self.values.dtype )

    def triples(self) -> set[tuple[int,int,float]]:
        return set( zip(self.row_idx.tolist(), self.col_idx.tolist(), self.values.tolist()) )


@dataclasses.dataclass(frozen=True, eq=False)
class CsrMatrix:
    rows_dim : int
    cols_dim : int
    values : numpy.ndarray
    col_idx : numpy.ndarray
    row_ptr : numpy.ndarray

    def __post_init__(self):
        object.__setattr__( self, "values", _value_array(self.values) )
        object.__setattr__( self, "col_idx", _index_array(self.col_idx) )
        object.__setattr__( self, "row_ptr", _index_array(self.row_ptr) )
        self.validate()

    def validate(self) -> None:
        _check_dims( self.rows_dim, self.cols_dim )
        if len(self.values) != len(self.col_idx):
            raise InvariantError( "CSR values and col_idx must have identical lengths." )
        row_ptr = self.row_ptr
        if len(row_ptr) != self.rows_dim + 1 or row_ptr[0] != 0 or row_ptr[-1] != len(self.values):
            raise InvariantError( "CSR row_ptr must hold rows_dim+1 offsets from 0 to nnz." )
        row_counts = numpy.diff( row_ptr )
        if numpy.any( row_counts < 0 ):
            raise InvariantError( "CSR row_ptr must be non-decreasing." )
        entry_rows = numpy.repeat( numpy.arange(self.rows_dim, dtype=INDEX_DTYPE), row_counts )
        _check_coordinates( entry_rows, self.col_idx, self.rows_dim, self.cols_dim )
        _check_strictly_increasing( entry_rows * self.cols_dim + self.col_idx, "by column within each row" )

    @property
    def nnz(self) -> int:
        return len(self.values)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows_dim, self.cols_dim)

    @property
    def scalar(self) -> Scalar:
        return Scalar.of( self.values.dtype )


@dataclasses.dataclass(frozen=True, eq=False)
class GcooMatrix:
    """
    Grouped COO.

    Rows are split into g groups of p consecutive rows, each group is a COO sorted by (col, row) so that
    equal columns form runs. The group COOs are concatenated, g_idxes holds each group's offset and
    nnz_per_group its length.
    """
    rows_dim : int
    cols_dim : int
    p : int
    values : numpy.ndarray
    row_idx : numpy.ndarray
    col_idx : numpy.ndarray
    g_idxes : numpy.ndarray
    nnz_per_group : numpy.ndarray

    def __post_init__(self):
        object.__setattr__( self, "values", _value_array(self.values) )
        for name in ("row_idx", "col_idx", "g_idxes", "nnz_per_group"):
            object.__setattr__( self, name, _index_array(getattr(self, name)) )
        self.validate()

    def validate(self) -> None:
        try:
            require_power_of_two( "p", self.p )
        except ValueError as e:
            raise InvariantError( str(e) ) from e
        _check_dims( self.rows_dim, self.cols_dim )
        if not (len(self.values) == len(self.row_idx) == len(self.col_idx)):
            raise InvariantError( "GCOO arrays must have identical lengths." )
        g = group_count( self.rows_dim, self.p )
        if len(self.g_idxes) != g or len(self.nnz_per_group) != g:
            raise InvariantError( f"Expected {g} groups for {self.rows_dim} rows with p={self.p}." )
        if numpy.any( self.nnz_per_group < 0 ) or int(self.nnz_per_group.sum()) != self.nnz:
            raise InvariantError( "nnz_per_group must be non-negative and sum to nnz." )
        if not numpy.array_equal( self.g_idxes, _exclusive_cumsum(self.nnz_per_group) ):
            raise InvariantError( "g_idxes must be the running offsets of nnz_per_group." )
        _check_coordinates( self.row_idx, self.col_idx, self.rows_dim, self.cols_dim )
        entry_groups = numpy.repeat( numpy.arange(g, dtype=INDEX_DTYPE), self.nnz_per_group )
        if not numpy.array_equal( self.row_idx // self.p, entry_groups ):
            raise InvariantError( "Every entry must lie in the row band of its group." )
        keys = (entry_groups * self.cols_dim + self.col_idx) * self.rows_dim + self.row_idx
        _check_strictly_increasing( keys, "by (col, row) within each group" )

    @property
    def g(self) -> int:
        return len(self.nnz_per_group)

    @property
    def nnz(self) -> int:
        return len(self.values)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows_dim, self.cols_dim)

    @property
    def scalar(self) -> Scalar:
        return Scalar.of( self.values.dtype )

    def group( self, index : int ) -> tuple[numpy.ndarray, numpy.ndarray, numpy.ndarray]:
        """(values, row_idx, col_idx) of one group."""
        start = int(self.g_idxes[index])
        stop = start + int(self.nnz_per_group[index])
        return self.values[start:stop], self.row_idx[start:stop], self.col_idx[start:stop]

    def footprint(self) -> "StorageFootprint":
        return storage_footprint( SparseFormat.GCOO, self.rows_dim, self.nnz, self.p )


@dataclasses.dataclass(frozen=True)
class StorageFootprint:
    format : SparseFormat
    words : int


def group_count( rows_dim : int, p : int ) -> int:
    return (rows_dim + p - 1) // p

def _exclusive_cumsum( counts : numpy.ndarray ) -> numpy.ndarray:
    offsets = numpy.zeros( len(counts), dtype=INDEX_DTYPE )
    if len(counts) > 1:
        numpy.cumsum( counts[:-1], out=offsets[1:] )
    return offsets


def storage_footprint( format : SparseFormat, n : int, nnz : int, p : int = 1 ) -> StorageFootprint:
    """Index plus value slots needed to store nnz entries of a matrix with n rows."""
    if format is SparseFormat.CSR:
        words = 2 * nnz + n
    elif format is SparseFormat.COO:
        words = 3 * nnz
    else:
        require_power_of_two( "p", p )
        words = 3 * nnz + 2 * group_count( n, p )
    return StorageFootprint( format=format, words=words )

def sparsity( matrix : DenseMatrix ) -> float:
    """Fraction of zero-valued elements."""
    return 1.0 - numpy.count_nonzero( matrix.data ) / (matrix.rows * matrix.cols)


def dense_to_coo( matrix : DenseMatrix ) -> CooMatrix:
    array = matrix.array
    row_idx, col_idx = numpy.nonzero( array )
    return CooMatrix( rows_dim=matrix.rows, cols_dim=matrix.cols, values=array[row_idx, col_idx], row_idx=row_idx, col_idx=col_idx )

def coo_to_dense( matrix : CooMatrix ) -> DenseMatrix:
    array = numpy.zeros( matrix.shape, dtype=matrix.values.dtype )
    array[matrix.row_idx, matrix.col_idx] = matrix.values
    return DenseMatrix.from_array( array )

def dense_to_csr( matrix : DenseMatrix ) -> CsrMatrix:
    return coo_to_csr( dense_to_coo(matrix) )

def coo_to_csr( matrix : CooMatrix ) -> CsrMatrix:
    row_counts = numpy.bincount( matrix.row_idx, minlength=matrix.rows_dim )
    row_ptr = numpy.zeros( matrix.rows_dim + 1, dtype=INDEX_DTYPE )
    numpy.cumsum( row_counts, out=row_ptr[1:] )
    return CsrMatrix( rows_dim=matrix.rows_dim, cols_dim=matrix.cols_dim, values=matrix.values, col_idx=matrix.col_idx, row_ptr=row_ptr )

def csr_to_coo( matrix : CsrMatrix ) -> CooMatrix:
    row_idx = numpy.repeat( numpy.arange(matrix.rows_dim, dtype=INDEX_DTYPE), numpy.diff(matrix.row_ptr) )
    return CooMatrix( rows_dim=matrix.rows_dim, cols_dim=matrix.cols_dim, values=matrix.values, row_idx=row_idx, col_idx=matrix.col_idx )

def csr_to_dense( matrix : CsrMatrix ) -> DenseMatrix:
    matrix.validate()
    return coo_to_dense( csr_to_coo(matrix) )


def dense_to_gcoo( matrix : DenseMatrix, p : int, workers : int = 1 ) -> GcooMatrix:
    """
    Convert in two passes.

    Pass 1 counts nonzeros per group and derives nnz, g_idxes and nnz_per_group.
    Pass 2 allocates values/row_idx/col_idx and fills every group independently, on `workers` threads.
    """
    require_power_of_two( "p", p )
    array = matrix.array
    g = group_count( matrix.rows, p )

    row_counts = numpy.count_nonzero( array, axis=1 )
    nnz_per_group = numpy.add.reduceat( row_counts, numpy.arange(0, matrix.rows, p) ).astype( INDEX_DTYPE )
    g_idxes = _exclusive_cumsum( nnz_per_group )
    nnz = int(nnz_per_group.sum())

    values = numpy.empty( nnz, dtype=array.dtype )
    row_idx = numpy.empty( nnz, dtype=INDEX_DTYPE )
    col_idx = numpy.empty( nnz, dtype=INDEX_DTYPE )

    def fill_groups( group_range : range ) -> None:
        _kernels.gcoo_fill_groups( array, p, g_idxes, group_range.start, group_range.stop, values, row_idx, col_idx )

    pool = WorkerPool( workers )
    chunk = max( 1, (g + pool.workers - 1) // pool.workers )
    pool.map( fill_groups, [range(start, min(start + chunk, g)) for start in range(0, g, chunk)] )
    _logger.debug( "converted %dx%d dense matrix to GCOO, p=%d, g=%d, nnz=%d", matrix.rows, matrix.cols, p, g, nnz )

    return GcooMatrix(
        rows_dim=matrix.rows,
        cols_dim=matrix.cols,
        p=p,
        values=values,
        row_idx=row_idx,
        col_idx=col_idx,
        g_idxes=g_idxes,
        nnz_per_group=nnz_per_group,
    )

def coo_to_gcoo( matrix : CooMatrix, p : int ) -> GcooMatrix:
    require_power_of_two( "p", p )
    g = group_count( matrix.rows_dim, p )
    groups = matrix.row_idx // p
    nnz_per_group = numpy.bincount( groups, minlength=g ).astype( INDEX_DTYPE )
    order = numpy.lexsort( (matrix.row_idx, matrix.col_idx, groups) )
    return GcooMatrix(
        rows_dim=matrix.rows_dim,
        cols_dim=matrix.cols_dim,
        p=p,
        values=matrix.values[order],
        row_idx=matrix.row_idx[order],
        col_idx=matrix.col_idx[order],
        g_idxes=_exclusive_cumsum( nnz_per_group ),
        nnz_per_group=nnz_per_group,
    )

def gcoo_to_coo( matrix : GcooMatrix ) -> CooMatrix:
    order = numpy.lexsort( (matrix.col_idx, matrix.row_idx) )
    return CooMatrix( rows_dim=matrix.rows_dim, cols_dim=matrix.cols_dim, values=matrix.values[order], row_idx=matrix.row_idx[order], col_idx=matrix.col_idx[order] )

def gcoo_to_dense( matrix : GcooMatrix ) -> DenseMatrix:
    matrix.validate()
    array = numpy.zeros( matrix.shape, dtype=matrix.values.dtype )
    array[matrix.row_idx, matrix.col_idx] = matrix.values
    return DenseMatrix.from_array( array )
