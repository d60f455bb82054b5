"""
MatrixMarket exchange format.

scipy.io reads the header and the array-format bodies and writes every file. Coordinate bodies are
parsed here because errors must name the offending line and duplicates must be rejected.
"""
import logging
import pathlib
import numpy
import scipy.io
import scipy.sparse
from .interface import (
    Scalar,
    DataError,
    MatrixFormatError,
)
from ._matrix import (
    INDEX_DTYPE,
    DenseMatrix,
    CooMatrix,
    CsrMatrix,
    GcooMatrix,
    csr_to_coo,
    gcoo_to_coo,
)

_logger = logging.getLogger(__name__)

_SUPPORTED_FIELDS = ('real', 'integer', 'pattern')
_SUPPORTED_SYMMETRIES = ('general', 'symmetric', 'skew-symmetric')


def _data_lines( path : pathlib.Path ) -> tuple[list[str], list[int]]:
    """Non-comment, non-blank lines with their 1-based line numbers."""
    lines, numbers = [], []
    try:
        with open( path, "r", encoding="ascii", errors="replace" ) as stream:
            for number, line in enumerate( stream, start=1 ):
                stripped = line.strip()
                if stripped and not stripped.startswith( "%" ):
                    lines.append( stripped )
                    numbers.append( number )
    except OSError as e:
        raise DataError( f"Cannot read {path}: {e}" ) from e
    return lines, numbers

def _parse_entries( path : pathlib.Path, lines : list[str], numbers : list[int], columns : int ) -> numpy.ndarray:
    if not lines:
        return numpy.empty( (0, columns), dtype=numpy.float64 )
    try:
        table = numpy.loadtxt( lines, dtype=numpy.float64, ndmin=2 )
    except ValueError:
        table = None
    if table is None or table.shape[1] < columns:
        # locate the first offending line
        for line, number in zip( lines, numbers ):
            fields = line.split()
            try:
                [float(field) for field in fields[:columns]]
            except ValueError:
                raise MatrixFormatError( path, number, f"cannot parse entry {line!r}" ) from None
            if len(fields) < columns:
                raise MatrixFormatError( path, number, f"expected {columns} fields, got {len(fields)}" )
        raise MatrixFormatError( path, None, "inconsistent number of fields per entry" )
    return table[:, :columns]


def _read_coordinate(
        path : pathlib.Path,
        rows_dim : int,
        cols_dim : int,
        entries : int,
        field : str,
        symmetry : str,
        scalar : Scalar ) -> CooMatrix:
    lines, numbers = _data_lines( path )
    # the first data line is the size line
    lines, numbers = lines[1:], numpy.asarray( numbers[1:], dtype=INDEX_DTYPE )
    if len(lines) != entries:
        raise MatrixFormatError( path, None, f"header announces {entries} entries, found {len(lines)}" )

    table = _parse_entries( path, lines, numbers.tolist(), 2 if field == 'pattern' else 3 )
    indices = table[:, :2]
    fractional = numpy.flatnonzero( numpy.any( indices != numpy.floor(indices), axis=1 ) )
    if fractional.size:
        raise MatrixFormatError( path, int(numbers[fractional[0]]), "indices must be integers" )
    row_idx = indices[:, 0].astype( INDEX_DTYPE ) - 1
    col_idx = indices[:, 1].astype( INDEX_DTYPE ) - 1
    values = numpy.ones( len(lines), dtype=numpy.float64 ) if field == 'pattern' else table[:, 2]

    outside = numpy.flatnonzero( (row_idx < 0) | (row_idx >= rows_dim) | (col_idx < 0) | (col_idx >= cols_dim) )
    if outside.size:
        first = outside[0]
        raise MatrixFormatError(
            path, int(numbers[first]),
            f"index ({row_idx[first] + 1}, {col_idx[first] + 1}) outside the {rows_dim}x{cols_dim} matrix"
        )

    if symmetry != 'general':
        mirrored = row_idx != col_idx
        sign = -1.0 if symmetry == 'skew-symmetric' else 1.0
        numbers = numpy.concatenate( (numbers, numbers[mirrored]) )
        row_idx, col_idx = numpy.concatenate( (row_idx, col_idx[mirrored]) ), numpy.concatenate( (col_idx, row_idx[mirrored]) )
        values = numpy.concatenate( (values, sign * values[mirrored]) )

    keys = row_idx * cols_dim + col_idx
    order = numpy.argsort( keys, kind="stable" )
    repeated = numpy.flatnonzero( numpy.diff(keys[order]) == 0 )
    if repeated.size:
        duplicate = order[repeated[0] + 1]
        raise MatrixFormatError(
            path, int(numbers[duplicate]),
            f"duplicate entry ({row_idx[duplicate] + 1}, {col_idx[duplicate] + 1})"
        )

    return CooMatrix(
        rows_dim=rows_dim,
        cols_dim=cols_dim,
        values=values[order].astype( scalar.dtype ),
        row_idx=row_idx[order],
        col_idx=col_idx[order],
    )

def read_matrix_market( path : str | pathlib.Path, scalar : Scalar = Scalar.F64 ) -> DenseMatrix | CooMatrix:
    """
    Read a MatrixMarket file.

    Coordinate files give a CooMatrix in row-major order, array files a DenseMatrix. Symmetric and
    skew-symmetric files are expanded to the full pattern, pattern files get the value 1.0 and
    integer fields are read as real values.
    """
    path = pathlib.Path( path )
    try:
        rows_dim, cols_dim, entries, layout, field, symmetry = scipy.io.mminfo( str(path) )
    except OSError as e:
        raise DataError( f"Cannot read {path}: {e}" ) from e
    except (ValueError, IndexError) as e:
        raise MatrixFormatError( path, 1, f"malformed header: {e}" ) from e

    if field not in _SUPPORTED_FIELDS:
        raise MatrixFormatError( path, 1, f"unsupported field {field!r}" )
    if symmetry not in _SUPPORTED_SYMMETRIES:
        raise MatrixFormatError( path, 1, f"unsupported symmetry {symmetry!r}" )
    if rows_dim < 1 or cols_dim < 1:
        raise MatrixFormatError( path, None, f"matrix dimensions must be positive, got {rows_dim}x{cols_dim}" )

    if layout == 'coordinate':
        matrix = _read_coordinate( path, rows_dim, cols_dim, entries, field, symmetry, scalar )
        _logger.debug( "read %s: %dx%d coordinate, %s, %d stored entries, nnz=%d", path, rows_dim, cols_dim, symmetry, entries, matrix.nnz )
        return matrix

    try:
        array = numpy.asarray( scipy.io.mmread( str(path) ), dtype=scalar.dtype )
    except ValueError as e:
        raise MatrixFormatError( path, None, str(e) ) from e
    _logger.debug( "read %s: %dx%d array, %s", path, rows_dim, cols_dim, symmetry )
    return DenseMatrix.from_array( array )


def write_matrix_market( matrix : DenseMatrix | CooMatrix | CsrMatrix | GcooMatrix, path : str | pathlib.Path ) -> None:
    """Write a dense matrix in array layout, any sparse format as a general coordinate file."""
    path = pathlib.Path( path )
    if isinstance( matrix, DenseMatrix ):
        target = matrix.array
    else:
        if isinstance( matrix, CsrMatrix ):
            matrix = csr_to_coo( matrix )
        elif isinstance( matrix, GcooMatrix ):
            matrix = gcoo_to_coo( matrix )
        target = scipy.sparse.coo_matrix( (matrix.values, (matrix.row_idx, matrix.col_idx)), shape=matrix.shape )
    try:
        # scipy appends .mtx to bare path names, a file object keeps the name as given
        with open( path, "wb" ) as stream:
            scipy.io.mmwrite( stream, target, symmetry='general' )
    except OSError as e:
        raise DataError( f"Cannot write {path}: {e}" ) from e
    _logger.debug( "wrote %s", path )
