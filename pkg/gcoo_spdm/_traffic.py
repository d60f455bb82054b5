"""
Memory-traffic model of the GCOO and row-split CSR kernels.

Counts are derived from the nonzero coordinates alone. A transaction moves 32 consecutive elements
(one warp), element size is the scalar width. Two cache modes bracket the real hierarchy:
COLD sends every access to DRAM, INFINITE_L2 sends the first touch of an address to DRAM and every
repeat to L2.
"""
import dataclasses
import logging
import numpy
from .interface import (
    ExecConfig,
    CacheMode,
    Scalar,
    ConfigError,
    DataError,
    InvariantError,
    UndefinedIntensityError,
)
from ._matrix import (
    INDEX_DTYPE,
    group_count,
)

_logger = logging.getLogger(__name__)

TRANSACTION_ELEMENTS = 32


@dataclasses.dataclass(frozen=True)
class RooflineModel:
    name : str
    peak_flops : float
    bandwidth : float
    sms : int = 0
    cores_per_sm : int = 0

    def __post_init__(self):
        if self.peak_flops <= 0 or self.bandwidth <= 0:
            raise ConfigError( "Peak throughput and bandwidth must be positive." )

    def ridge_intensity(self) -> float:
        """Operational intensity where the bound turns from memory to compute."""
        return self.peak_flops / self.bandwidth

    def curve( self, intensities ) -> list[tuple[float, float]]:
        return [(float(r), roofline_throughput(float(r), self)) for r in intensities]


ROOFLINE_PROFILES : dict[str, RooflineModel] = {
    model.name.lower(): model for model in [
        RooflineModel( name="GTX980", peak_flops=4.981e12, bandwidth=224e9, sms=16, cores_per_sm=128 ),
        RooflineModel( name="TitanX", peak_flops=10.97e12, bandwidth=433e9, sms=28, cores_per_sm=128 ),
        RooflineModel( name="P100", peak_flops=9.5e12, bandwidth=732e9, sms=56, cores_per_sm=64 ),
    ]
}

def roofline_profile( name : str ) -> RooflineModel:
    try:
        return ROOFLINE_PROFILES[name.lower()]
    except KeyError:
        raise ConfigError( f"Unknown hardware profile {name!r}, known: {', '.join(m.name for m in ROOFLINE_PROFILES.values())}." ) from None


@dataclasses.dataclass(frozen=True)
class TrafficReport:
    """
    Modeled transaction counts.

    params:
        n_dm - DRAM transactions
        n_l2 - L2 transactions
        n_shm - staging buffer (shared memory) transactions
        tex_l1_trans - B elements served from the register reuse window
        flops - floating point operations
        b_loads - B elements loaded into the bv register, element granularity
    """
    n_dm : int = 0
    n_l2 : int = 0
    n_shm : int = 0
    tex_l1_trans : int = 0
    flops : int = 0
    b_loads : int = 0

    def __post_init__(self):
        if min( self.n_dm, self.n_l2, self.n_shm, self.tex_l1_trans, self.flops, self.b_loads ) < 0:
            raise InvariantError( "Traffic counts cannot be negative." )

    def total_transactions(self) -> int:
        return self.n_dm + self.n_l2 + self.n_shm + self.tex_l1_trans


def bytes_per_transaction( scalar : Scalar ) -> int:
    return TRANSACTION_ELEMENTS * scalar.dtype.itemsize

def operational_intensity( report : TrafficReport, bytes_per_transaction : int ) -> float:
    """Flops per byte of DRAM traffic."""
    if report.flops == 0:
        return 0.0
    dram_bytes = report.n_dm * bytes_per_transaction
    if dram_bytes <= 0:
        raise UndefinedIntensityError( "Operational intensity is undefined without DRAM traffic." )
    return report.flops / dram_bytes

def roofline_throughput( intensity : float, hardware : RooflineModel ) -> float:
    """Attainable flops per second, min(peak, r x bandwidth)."""
    if intensity < 0:
        raise ConfigError( "Operational intensity cannot be negative." )
    return min( hardware.peak_flops, intensity * hardware.bandwidth )


def _transactions( elements ):
    return (elements + TRANSACTION_ELEMENTS - 1) // TRANSACTION_ELEMENTS

def _validated_pattern( row_idx, col_idx, shape : tuple[int, int] ) -> tuple[numpy.ndarray, numpy.ndarray]:
    row_idx = numpy.asarray( row_idx, dtype=INDEX_DTYPE )
    col_idx = numpy.asarray( col_idx, dtype=INDEX_DTYPE )
    rows_dim, cols_dim = shape
    if row_idx.shape != col_idx.shape or row_idx.ndim != 1:
        raise DataError( "Pattern coordinates must be two one-dimensional arrays of equal length." )
    if row_idx.size and (row_idx.min() < 0 or row_idx.max() >= rows_dim or col_idx.min() < 0 or col_idx.max() >= cols_dim):
        raise DataError( f"Pattern coordinates outside the {rows_dim}x{cols_dim} matrix." )
    keys = numpy.unique( row_idx * cols_dim + col_idx )
    if keys.size != row_idx.size:
        raise DataError( "Pattern contains duplicate coordinates." )
    return row_idx, col_idx

def _strip_widths( n_cols : int, b : int ) -> numpy.ndarray:
    if n_cols < 1:
        raise ConfigError( f"The dense operand needs at least one column, got {n_cols}." )
    widths = numpy.full( (n_cols + b - 1) // b, b, dtype=INDEX_DTYPE )
    widths[-1] = n_cols - b * (len(widths) - 1)
    return widths

def _group_heights( rows_dim : int, p : int ) -> numpy.ndarray:
    g = group_count( rows_dim, p )
    heights = numpy.full( g, p, dtype=INDEX_DTYPE )
    heights[-1] = rows_dim - p * (g - 1)
    return heights

def _output_stores( heights : numpy.ndarray, widths : numpy.ndarray ) -> int:
    return int( _transactions( numpy.outer(heights, widths) ).sum() )


def count_runs( row_idx, col_idx, shape : tuple[int, int], p : int ) -> numpy.ndarray:
    """
    Maximal same-column runs per group.

    Inside a group entries are ordered by (col, row), so the runs are exactly the distinct columns.
    """
    row_idx = numpy.asarray( row_idx, dtype=INDEX_DTYPE )
    col_idx = numpy.asarray( col_idx, dtype=INDEX_DTYPE )
    groups = row_idx // p
    distinct = numpy.unique( groups * shape[1] + col_idx )
    return numpy.bincount( distinct // shape[1], minlength=group_count(shape[0], p) )

def model_gcoo_traffic(
        row_idx,
        col_idx,
        shape : tuple[int, int],
        n_cols : int,
        cfg : ExecConfig = ExecConfig(),
        cache_mode : CacheMode = CacheMode.INFINITE_L2 ) -> TrafficReport:
    """
    Model the GCOO kernel for an m x k pattern times a k x n_cols dense operand.

    Per tile (group times strip of width w): 2 staging transactions per entry, ceil(3 nnz_g / 32)
    sparse-operand transactions, ceil(w / 32) per same-column run for B, ceil(rows_g * w / 32) output
    stores to DRAM, and (nnz_g - runs_g) * w B elements served by register reuse.
    A pattern without nonzeros still stores every output tile.
    """
    row_idx, col_idx = _validated_pattern( row_idx, col_idx, shape )
    p = cfg.p
    widths = _strip_widths( n_cols, cfg.b )
    strips = len(widths)
    strip_transactions = int( _transactions(widths).sum() )
    nnz = len(row_idx)

    nnz_per_group = numpy.bincount( row_idx // p, minlength=group_count(shape[0], p) )
    runs = int( count_runs(row_idx, col_idx, shape, p).sum() )
    sparse_transactions = int( _transactions(3 * nnz_per_group).sum() )
    distinct_cols = int( numpy.unique(col_idx).size )

    n_dm = _output_stores( _group_heights(shape[0], p), widths )
    n_l2 = 0
    if cache_mode is CacheMode.COLD:
        n_dm += strips * sparse_transactions + strip_transactions * runs
    else:
        n_dm += sparse_transactions + strip_transactions * distinct_cols
        n_l2 += (strips - 1) * sparse_transactions + strip_transactions * (runs - distinct_cols)

    report = TrafficReport(
        n_dm=n_dm,
        n_l2=n_l2,
        n_shm=2 * nnz * strips,
        tex_l1_trans=(nnz - runs) * n_cols,
        flops=2 * nnz * n_cols,
        b_loads=runs * n_cols,
    )
    _logger.debug( "GCOO traffic %dx%d nnz=%d %s: %s", shape[0], shape[1], nnz, cache_mode.value, report )
    return report

def model_csr_traffic(
        row_idx,
        col_idx,
        shape : tuple[int, int],
        n_cols : int,
        cfg : ExecConfig = ExecConfig(),
        cache_mode : CacheMode = CacheMode.INFINITE_L2 ) -> TrafficReport:
    """
    Model a row-split CSR kernel without staging buffer or register reuse.

    Per tile (row times strip of width w): ceil(2 nnz_row / 32) sparse-operand transactions,
    ceil(w / 32) per nonzero for B, ceil(w / 32) output stores to DRAM.
    """
    row_idx, col_idx = _validated_pattern( row_idx, col_idx, shape )
    widths = _strip_widths( n_cols, cfg.b )
    strips = len(widths)
    strip_transactions = int( _transactions(widths).sum() )
    nnz = len(row_idx)

    nnz_per_row = numpy.bincount( row_idx, minlength=shape[0] )
    sparse_transactions = int( _transactions(2 * nnz_per_row).sum() )
    distinct_cols = int( numpy.unique(col_idx).size )

    n_dm = shape[0] * strip_transactions
    n_l2 = 0
    if cache_mode is CacheMode.COLD:
        n_dm += strips * sparse_transactions + strip_transactions * nnz
    else:
        n_dm += sparse_transactions + strip_transactions * distinct_cols
        n_l2 += (strips - 1) * sparse_transactions + strip_transactions * (nnz - distinct_cols)

    return TrafficReport(
        n_dm=n_dm,
        n_l2=n_l2,
        n_shm=0,
        tex_l1_trans=0,
        flops=2 * nnz * n_cols,
        b_loads=nnz * n_cols,
    )

def reuse_ratio( row_idx, col_idx, shape : tuple[int, int], cfg : ExecConfig = ExecConfig() ) -> float:
    """
    Fraction of multiply-adds the GCOO kernel serves from a reused bv.

    Close to 0 for diagonal-dominated matrices, where grouping buys nothing.
    """
    nnz = len(row_idx)
    if nnz == 0:
        return 0.0
    runs = int( count_runs(row_idx, col_idx, shape, cfg.p).sum() )
    return (nnz - runs) / nnz


def fit_scaling_exponent( xs, ys ) -> float:
    """Least-squares slope of log(ys) against log(xs)."""
    xs = numpy.asarray( xs, dtype=numpy.float64 )
    ys = numpy.asarray( ys, dtype=numpy.float64 )
    if xs.shape != ys.shape or xs.size < 3:
        raise DataError( "At least three (x, y) points are needed." )
    if numpy.any( xs <= 0 ) or numpy.any( ys <= 0 ):
        raise DataError( "Scaling fits need positive values." )
    slope, _ = numpy.polyfit( numpy.log(xs), numpy.log(ys), 1 )
    return float(slope)
