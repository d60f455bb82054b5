"""
Benchmark harness.

Every result type converts to a CSV row of strings and back without loss. Floats are written with
repr, so a re-read row compares equal to the one written.
"""
import csv
import dataclasses
import logging
import pathlib
import statistics
import time
import typing
import numpy
from .interface import (
    ExecConfig,
    BenchConfiguration,
    CacheMode,
    Kernel,
    Scalar,
    TrafficKernel,
    MatrixSource,
    ConfigError,
    DataError,
)
from ._matrix import (
    DenseMatrix,
    dense_to_coo,
    dense_to_csr,
    dense_to_gcoo,
)
from ._spdm import (
    gemm_oracle,
    gemm_dense_blocked,
    spdm_csr,
    spdm_coo,
    spdm_gcoo,
)
from ._traffic import (
    TrafficReport,
    model_gcoo_traffic,
    model_csr_traffic,
)
from ._dataset import (
    SweepGrid,
    GeneratedSource,
)
from .utility import (
    EventDispatcher,
    Stopwatch,
    time_repeatedly,
)

_logger = logging.getLogger(__name__)

_T = typing.TypeVar('_T')


def effective_gflops( n : int, s : float, t : float, m : int | None = None, k : int | None = None ) -> float:
    """
    Work implied by the nonzeros, 2 m k n (1-s), divided by t, in GFLOPS.

    m and k default to n, which gives the square form 2 n^3 (1-s) / t.
    """
    if t <= 0:
        raise ConfigError( f"Elapsed time must be positive, got {t}." )
    m = n if m is None else m
    k = n if k is None else k
    return 2.0 * m * k * n * (1.0 - s) / t / 1e9


def dense_operand( rows : int, cols : int, seed : int, scalar : Scalar = Scalar.F32 ) -> DenseMatrix:
    """The dense right-hand operand, uniform in [0, 1)."""
    rng = numpy.random.Generator( numpy.random.PCG64(seed) )
    return DenseMatrix.from_array( rng.random( (rows, cols) ).astype( scalar.dtype ) )


class _CsvRecord:
    """Row conversion for flat frozen dataclasses with int, float, str and enum fields."""

    @classmethod
    def columns(cls) -> tuple[str, ...]:
        return tuple( field.name for field in dataclasses.fields(cls) )

    def to_row(self) -> dict[str, str]:
        row = {}
        for field in dataclasses.fields(self):
            value = getattr( self, field.name )
            if isinstance( value, float ):
                row[field.name] = repr(value)
            elif hasattr( value, "value" ):
                row[field.name] = str(value.value)
            else:
                row[field.name] = str(value)
        return row

    @classmethod
    def from_row( cls, row : dict[str, str] ):
        hints = typing.get_type_hints( cls )
        try:
            return cls( **{ name: hints[name]( row[name] ) for name in cls.columns() } )
        except (KeyError, TypeError, ValueError) as e:
            raise DataError( f"Malformed {cls.__name__} row {row!r}: {e}" ) from e


@dataclasses.dataclass(frozen=True)
class BenchResult(_CsvRecord):
    kernel : Kernel
    name : str
    m : int
    k : int
    n : int
    nnz : int
    sparsity : float
    eo_seconds : float
    kc_seconds : float
    effective_gflops : float
    repetitions : int
    p : int
    b : int
    workers : int
    scalar : Scalar

    def __post_init__(self):
        if self.kc_seconds <= 0:
            raise DataError( "Kernel time must be positive." )
        expected = effective_gflops( self.n, self.sparsity, self.kc_seconds, self.m, self.k )
        if not numpy.isclose( self.effective_gflops, expected, rtol=1e-9, atol=0.0 ):
            raise DataError( f"Row {self.name}/{self.kernel.value} reports {self.effective_gflops} GFLOPS, its own timing gives {expected}." )

    def key(self) -> tuple:
        """Identity of a sweep row, used to skip completed work on resume."""
        return (self.kernel, self.name, self.p, self.b, self.workers, self.scalar)

@dataclasses.dataclass(frozen=True)
class TrafficRow(_CsvRecord):
    kernel : TrafficKernel
    name : str
    m : int
    k : int
    n : int
    nnz : int
    cache_mode : CacheMode
    p : int
    b : int
    n_dm : int
    n_l2 : int
    n_shm : int
    tex_l1_trans : int
    flops : int
    b_loads : int

    @property
    def report(self) -> TrafficReport:
        return TrafficReport(
            n_dm=self.n_dm, n_l2=self.n_l2, n_shm=self.n_shm, tex_l1_trans=self.tex_l1_trans, flops=self.flops, b_loads=self.b_loads
        )


def write_csv( rows : typing.Sequence[_CsvRecord], target : str | pathlib.Path | typing.TextIO, columns : tuple[str, ...] | None = None ) -> None:
    """Write rows with a header to a path or an open text stream."""
    if columns is None:
        if not rows:
            raise ConfigError( "Column names are needed to write an empty table." )
        columns = type( rows[0] ).columns()

    def write( stream : typing.TextIO ) -> None:
        writer = csv.DictWriter( stream, fieldnames=columns, lineterminator="\n" )
        writer.writeheader()
        for row in rows:
            writer.writerow( row.to_row() )

    if not isinstance( target, (str, pathlib.Path) ):
        write( target )
        return
    try:
        with open( target, "w", newline="" ) as stream:
            write( stream )
    except OSError as e:
        raise DataError( f"Cannot write {target}: {e}" ) from e

def read_csv( path : str | pathlib.Path, record : type[_T] ) -> list[_T]:
    try:
        with open( path, "r", newline="" ) as stream:
            return [record.from_row( row ) for row in csv.DictReader( stream )]
    except OSError as e:
        raise DataError( f"Cannot read {path}: {e}" ) from e


def _prepare( kernel : Kernel, a : DenseMatrix, b : DenseMatrix, cfg : ExecConfig ) -> tuple[typing.Callable[[], typing.Any], float]:
    """
    Convert A into the kernel's input format.

    Returns: (kernel call, seconds spent converting)
    """
    if kernel is Kernel.ORACLE:
        return (lambda: gemm_oracle( a, b )), 0.0
    if kernel is Kernel.DENSE:
        return (lambda: gemm_dense_blocked( a, b, cfg )), 0.0

    with Stopwatch() as conversion:
        if kernel is Kernel.CSR:
            operand = dense_to_csr( a )
        elif kernel is Kernel.COO:
            operand = dense_to_coo( a )
        else:
            operand = dense_to_gcoo( a, cfg.p, workers=cfg.workers )

    if kernel is Kernel.CSR:
        return (lambda: spdm_csr( operand, b, cfg )), conversion.seconds
    if kernel is Kernel.COO:
        return (lambda: spdm_coo( operand, b, cfg )), conversion.seconds
    return (lambda: spdm_gcoo( operand, b, cfg )), conversion.seconds

def run_benchmark(
        source : MatrixSource,
        kernel : Kernel,
        cfg : ExecConfig = ExecConfig(),
        bench : BenchConfiguration = BenchConfiguration(),
        n_cols : int | None = None,
        operands : tuple[DenseMatrix, DenseMatrix] | None = None ) -> BenchResult:
    """
    Time one kernel on one matrix.

    The matrix is materialized densely, then converted once into the kernel's format (EO). KC is the
    median of `bench.repetitions` kernel runs after `bench.warmup` untimed runs. The dense operand has
    `n_cols` columns, by default as many as A has.

    params:
        operands - already materialized (A, B), skips materialization when several kernels share a matrix
    """
    if operands is None:
        a = source.dense( bench.scalar )
        b = dense_operand( a.cols, a.cols if n_cols is None else n_cols, bench.seed, bench.scalar )
    else:
        a, b = operands
    if a.cols != b.rows:
        raise DataError( f"Cannot multiply {a.rows}x{a.cols} by {b.rows}x{b.cols}." )

    call, eo_seconds = _prepare( kernel, a, b, cfg )
    durations = time_repeatedly( call, bench.repetitions, bench.warmup )
    kc_seconds = max( statistics.median(durations), time.get_clock_info( "perf_counter" ).resolution )

    nnz = int( numpy.count_nonzero( a.data ) )
    s = 1.0 - nnz / (a.rows * a.cols)
    result = BenchResult(
        kernel=kernel,
        name=source.name,
        m=a.rows,
        k=a.cols,
        n=b.cols,
        nnz=nnz,
        sparsity=s,
        eo_seconds=eo_seconds,
        kc_seconds=kc_seconds,
        effective_gflops=effective_gflops( b.cols, s, kc_seconds, a.rows, a.cols ),
        repetitions=bench.repetitions,
        p=cfg.p,
        b=cfg.b,
        workers=cfg.workers,
        scalar=bench.scalar,
    )
    _logger.info( "%s on %s: EO %.6f s, KC %.6f s, %.3f GFLOPS", kernel.value, source.name, eo_seconds, kc_seconds, result.effective_gflops )
    return result


def sweep(
        grid : SweepGrid,
        kernels : typing.Sequence[Kernel],
        cfg : ExecConfig = ExecConfig(),
        bench : BenchConfiguration = BenchConfiguration(),
        out : str | pathlib.Path | None = None,
        dispatcher : EventDispatcher[BenchResult] | None = None ) -> list[BenchResult]:
    """
    Benchmark every (n, s) point of the grid with every kernel.

    Rows are appended to `out` as soon as they are measured. An existing file is resumed: rows already
    present are kept and not measured again.

    Returns: all rows of the output, earlier ones included
    """
    rows : list[BenchResult] = []
    resuming = out is not None and pathlib.Path(out).exists() and pathlib.Path(out).stat().st_size > 0
    if resuming:
        rows = read_csv( out, BenchResult )
        _logger.info( "resuming %s with %d completed rows", out, len(rows) )
    done = { row.key() for row in rows }

    stream = None
    writer = None
    if out is not None:
        try:
            stream = open( out, "a", newline="" )
        except OSError as e:
            raise DataError( f"Cannot write {out}: {e}" ) from e
        writer = csv.DictWriter( stream, fieldnames=BenchResult.columns(), lineterminator="\n" )
        if not resuming:
            writer.writeheader()

    try:
        for source in grid.sources():
            pending = [kernel for kernel in kernels if (kernel, source.name, cfg.p, cfg.b, cfg.workers, bench.scalar) not in done]
            if not pending:
                _logger.info( "skipping %s, already measured", source.name )
                continue
            a = source.dense( bench.scalar )
            b = dense_operand( a.cols, a.cols, bench.seed, bench.scalar )
            for kernel in pending:
                result = run_benchmark( source, kernel, cfg, bench, operands=(a, b) )
                rows.append( result )
                done.add( result.key() )
                if writer is not None:
                    writer.writerow( result.to_row() )
                    stream.flush()
                if dispatcher is not None:
                    dispatcher.fire( result )
    finally:
        if stream is not None:
            stream.close()
    return rows


def crossover_search(
        n : int,
        s_grid : typing.Sequence[float],
        cfg : ExecConfig = ExecConfig(),
        bench : BenchConfiguration = BenchConfiguration() ) -> float | None:
    """
    Smallest sparsity of the grid at which the GCOO kernel time beats the blocked dense kernel.

    The dense kernel does not skip zeros, so it is timed once on the first grid point.
    """
    if not s_grid:
        raise ConfigError( "The sparsity grid is empty." )
    if any( a >= b for a, b in zip(s_grid, s_grid[1:]) ):
        raise ConfigError( "The sparsity grid must be ascending." )

    baseline = run_benchmark( GeneratedSource( n=n, sparsity=s_grid[0], seed=bench.seed ), Kernel.DENSE, cfg, bench )
    for s in s_grid:
        result = run_benchmark( GeneratedSource( n=n, sparsity=s, seed=bench.seed ), Kernel.GCOO, cfg, bench )
        if result.kc_seconds < baseline.kc_seconds:
            _logger.info( "crossover at n=%d: s=%g (GCOO %.6f s < dense %.6f s)", n, s, result.kc_seconds, baseline.kc_seconds )
            return s
    _logger.info( "no crossover at n=%d within the grid", n )
    return None


def traffic_report(
        source : MatrixSource,
        kernel : TrafficKernel,
        cfg : ExecConfig = ExecConfig(),
        cache_mode : CacheMode = CacheMode.INFINITE_L2,
        n_cols : int | None = None ) -> TrafficRow:
    """Model the traffic of one kernel on a matrix pattern against a dense operand with n_cols columns."""
    rows_dim, cols_dim = source.shape
    n_cols = cols_dim if n_cols is None else n_cols
    row_idx, col_idx = source.pattern()
    model = model_gcoo_traffic if kernel is TrafficKernel.GCOO else model_csr_traffic
    report = model( row_idx, col_idx, (rows_dim, cols_dim), n_cols, cfg, cache_mode )
    return TrafficRow(
        kernel=kernel,
        name=source.name,
        m=rows_dim,
        k=cols_dim,
        n=n_cols,
        nnz=len(row_idx),
        cache_mode=cache_mode,
        p=cfg.p,
        b=cfg.b,
        **dataclasses.asdict( report ),
    )


@dataclasses.dataclass(frozen=True)
class SpeedupSummary:
    kernel : Kernel
    baseline : Kernel
    matrices : int
    wins : int
    mean_speedup : float
    max_speedup : float

    @property
    def win_fraction(self) -> float:
        return self.wins / self.matrices if self.matrices else 0.0

def summarize_speedups( results : typing.Iterable[BenchResult], kernel : Kernel, baseline : Kernel ) -> SpeedupSummary:
    """Compare kernel against baseline on every matrix measured with both, speedup = baseline KC / kernel KC."""
    by_kernel : dict[Kernel, dict[str, BenchResult]] = { kernel: {}, baseline: {} }
    for result in results:
        if result.kernel in by_kernel:
            by_kernel[result.kernel][result.name] = result
    shared = sorted( by_kernel[kernel].keys() & by_kernel[baseline].keys() )
    speedups = [by_kernel[baseline][name].kc_seconds / by_kernel[kernel][name].kc_seconds for name in shared]
    return SpeedupSummary(
        kernel=kernel,
        baseline=baseline,
        matrices=len(shared),
        wins=sum( 1 for speedup in speedups if speedup > 1.0 ),
        mean_speedup=statistics.fmean(speedups) if speedups else 0.0,
        max_speedup=max(speedups, default=0.0),
    )
