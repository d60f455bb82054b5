import dataclasses
import logging
import numpy
from .interface import (
    ExecConfig,
    DataError,
    DimensionMismatchError,
    ConfigError,
)
from ._matrix import (
    INDEX_DTYPE,
    DenseMatrix,
    CooMatrix,
    CsrMatrix,
    GcooMatrix,
    dense_to_gcoo,
)
from .utility import (
    WorkerPool,
    Stopwatch,
)
from . import _kernels

_logger = logging.getLogger(__name__)

# tile lists are cut into this many chunks per worker so that uneven groups balance out
_CHUNKS_PER_WORKER = 4


@dataclasses.dataclass(frozen=True)
class KernelStats:
    """
    Dense-operand load accounting of a sparse kernel.

    params:
        flops - 2 x multiply-adds over all active lanes
        b_loads_total - B elements loaded into the bv register
        b_loads_reused - multiply-adds served by an already loaded bv
        staging_fills - COO entries copied into staging buffers
    """
    flops : int = 0
    b_loads_total : int = 0
    b_loads_reused : int = 0
    staging_fills : int = 0

    def __add__( self, other : "KernelStats" ) -> "KernelStats":
        return KernelStats(
            flops=self.flops + other.flops,
            b_loads_total=self.b_loads_total + other.b_loads_total,
            b_loads_reused=self.b_loads_reused + other.b_loads_reused,
            staging_fills=self.staging_fills + other.staging_fills,
        )

@dataclasses.dataclass(frozen=True)
class TimingBreakdown:
    """EO covers allocation and conversion to the sparse format, KC the kernel alone."""
    eo_seconds : float
    kc_seconds : float

    @property
    def eo_fraction(self) -> float:
        total = self.eo_seconds + self.kc_seconds
        return self.eo_seconds / total if total > 0 else 0.0


def _check_operands( a_shape : tuple[int, int], a_dtype : numpy.dtype, b : DenseMatrix ) -> None:
    if a_shape[1] != b.rows:
        raise DimensionMismatchError( f"Cannot multiply {a_shape[0]}x{a_shape[1]} by {b.rows}x{b.cols}." )
    if numpy.dtype(a_dtype) != b.data.dtype:
        raise DataError( f"Operands have different element types ({numpy.dtype(a_dtype)} and {b.data.dtype})." )

def _tile_chunks( row_tiles : int, strips : int, cfg : ExecConfig, pool : WorkerPool ) -> list[tuple[numpy.ndarray, numpy.ndarray]]:
    tile_rows = numpy.repeat( numpy.arange(row_tiles, dtype=INDEX_DTYPE), strips )
    tile_strips = numpy.tile( numpy.arange(strips, dtype=INDEX_DTYPE), row_tiles )
    if cfg.schedule_seed is not None:
        order = numpy.random.default_rng( cfg.schedule_seed ).permutation( len(tile_rows) )
        tile_rows = tile_rows[order]
        tile_strips = tile_strips[order]
    chunk_count = min( len(tile_rows), pool.workers * _CHUNKS_PER_WORKER )
    _logger.debug( "scheduling %d tiles (%d x %d) in %d chunks on %d workers", len(tile_rows), row_tiles, strips, chunk_count, pool.workers )
    return list( zip( numpy.array_split(tile_rows, chunk_count), numpy.array_split(tile_strips, chunk_count) ) )


def gemm_oracle( a : DenseMatrix, b : DenseMatrix ) -> DenseMatrix:
    """Naive triple loop with float64 accumulation, the reference for every other kernel."""
    if a.cols != b.rows:
        raise DimensionMismatchError( f"Cannot multiply {a.rows}x{a.cols} by {b.rows}x{b.cols}." )
    c = numpy.zeros( (a.rows, b.cols), dtype=numpy.float64 )
    _kernels.gemm_oracle_kernel( a.array, b.array, c )
    return DenseMatrix.from_array( c )

def gemm_dense_blocked( a : DenseMatrix, b : DenseMatrix, cfg : ExecConfig = ExecConfig() ) -> DenseMatrix:
    """Tiled dense product, p x b output tiles with per-tile accumulators."""
    _check_operands( a.shape, a.data.dtype, b )
    pool = WorkerPool( cfg.workers )
    c = numpy.empty( (a.rows, b.cols), dtype=a.data.dtype )
    a_array, b_array = a.array, b.array

    def run_chunk( chunk : tuple[numpy.ndarray, numpy.ndarray] ) -> None:
        acc = numpy.empty( (cfg.p, cfg.b), dtype=c.dtype )
        _kernels.dense_tiles( a_array, b_array, c, chunk[0], chunk[1], cfg.p, cfg.b, acc )

    pool.map( run_chunk, _tile_chunks( *cfg.tile_grid(a.rows, b.cols), cfg, pool ) )
    return DenseMatrix.from_array( c )

def spdm_csr( a : CsrMatrix, b : DenseMatrix, cfg : ExecConfig = ExecConfig() ) -> DenseMatrix:
    """Row-split product, one work item per row of C and strip of b columns."""
    _check_operands( a.shape, a.values.dtype, b )
    pool = WorkerPool( cfg.workers )
    c = numpy.empty( (a.rows_dim, b.cols), dtype=b.data.dtype )
    b_array = b.array
    strips = cfg.tile_grid( a.rows_dim, b.cols )[1]

    def run_chunk( chunk : tuple[numpy.ndarray, numpy.ndarray] ) -> int:
        acc = numpy.empty( cfg.b, dtype=c.dtype )
        return _kernels.csr_tiles( a.values, a.col_idx, a.row_ptr, b_array, c, chunk[0], chunk[1], cfg.b, acc )

    pool.map( run_chunk, _tile_chunks( a.rows_dim, strips, cfg, pool ) )
    return DenseMatrix.from_array( c )


def _run_grouped(
        values : numpy.ndarray,
        row_idx : numpy.ndarray,
        col_idx : numpy.ndarray,
        g_idxes : numpy.ndarray,
        nnz_per_group : numpy.ndarray,
        shape : tuple[int, int],
        p : int,
        reuse : bool,
        b : DenseMatrix,
        cfg : ExecConfig ) -> tuple[DenseMatrix, KernelStats]:
    pool = WorkerPool( cfg.workers )
    c = numpy.empty( (shape[0], b.cols), dtype=b.data.dtype )
    b_array = b.array
    strips = cfg.tile_grid( shape[0], b.cols )[1]

    def run_chunk( chunk : tuple[numpy.ndarray, numpy.ndarray] ) -> KernelStats:
        acc = numpy.empty( (min(p, shape[0]), cfg.b), dtype=c.dtype )
        bv = numpy.empty( cfg.b, dtype=c.dtype )
        s_vals = numpy.empty( cfg.b, dtype=values.dtype )
        s_rows = numpy.empty( cfg.b, dtype=INDEX_DTYPE )
        s_cols = numpy.empty( cfg.b, dtype=INDEX_DTYPE )
        loads, reused, fills = _kernels.gcoo_tiles(
            values, row_idx, col_idx, g_idxes, nnz_per_group, b_array, c, chunk[0], chunk[1], p, cfg.b, reuse,
            acc, bv, s_vals, s_rows, s_cols
        )
        return KernelStats( flops=2 * int(loads + reused), b_loads_total=int(loads), b_loads_reused=int(reused), staging_fills=int(fills) )

    stats = sum( pool.map( run_chunk, _tile_chunks( len(nnz_per_group), strips, cfg, pool ) ), KernelStats() )
    return DenseMatrix.from_array( c ), stats

def spdm_gcoo( a : GcooMatrix, b : DenseMatrix, cfg : ExecConfig = ExecConfig() ) -> tuple[DenseMatrix, KernelStats]:
    """
    Multiply a GCOO matrix by a dense matrix.

    One tile per (row group, column strip), each tile stages its group through a buffer of cfg.b
    entries and reuses the loaded B strip across same-column entries.

    Returns: (C, load statistics)
    """
    _check_operands( a.shape, a.values.dtype, b )
    if a.p != cfg.p:
        raise ConfigError( f"Matrix was grouped with p={a.p} but the kernel is configured with p={cfg.p}." )
    return _run_grouped( a.values, a.row_idx, a.col_idx, a.g_idxes, a.nnz_per_group, a.shape, a.p, True, b, cfg )

def spdm_coo_profiled( a : CooMatrix, b : DenseMatrix, cfg : ExecConfig = ExecConfig() ) -> tuple[DenseMatrix, KernelStats]:
    """The GCOO kernel structure with a single group and no reuse search, tiles are column strips."""
    _check_operands( a.shape, a.values.dtype, b )
    # a single group spanning every row, the accumulator height rounds up to a power of two for the row mask
    p = 1 << max( 0, (a.rows_dim - 1).bit_length() )
    g_idxes = numpy.zeros( 1, dtype=INDEX_DTYPE )
    nnz_per_group = numpy.array( [a.nnz], dtype=INDEX_DTYPE )
    return _run_grouped( a.values, a.row_idx, a.col_idx, g_idxes, nnz_per_group, a.shape, p, False, b, cfg )

def spdm_coo( a : CooMatrix, b : DenseMatrix, cfg : ExecConfig = ExecConfig() ) -> DenseMatrix:
    return spdm_coo_profiled( a, b, cfg )[0]

def spdm_gcoo_auto( a_dense : DenseMatrix, b : DenseMatrix, cfg : ExecConfig = ExecConfig() ) -> tuple[DenseMatrix, TimingBreakdown]:
    """
    Convert a dense sparse-valued matrix to GCOO and multiply it.

    Returns: (C, EO/KC timing), EO covers allocation and conversion, KC the kernel only
    """
    _check_operands( a_dense.shape, a_dense.data.dtype, b )
    with Stopwatch() as conversion:
        a = dense_to_gcoo( a_dense, cfg.p, workers=cfg.workers )
    with Stopwatch() as kernel:
        c, _ = spdm_gcoo( a, b, cfg )
    breakdown = TimingBreakdown( eo_seconds=conversion.seconds, kc_seconds=kernel.seconds )
    _logger.debug( "GCOO %dx%d: EO %.6f s, KC %.6f s", a.rows_dim, a.cols_dim, breakdown.eo_seconds, breakdown.kc_seconds )
    return c, breakdown
