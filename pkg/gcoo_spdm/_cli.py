import argparse
import csv
import dataclasses
import logging
import sys
import typing
import numpy
from .interface import (
    ExecConfig,
    BenchConfiguration,
    DatasetRules,
    CacheMode,
    Kernel,
    Scalar,
    SparseFormat,
    TrafficKernel,
    ConfigError,
    DataError,
)
from ._matrix import (
    CooMatrix,
    coo_to_csr,
    coo_to_gcoo,
    coo_to_dense,
    group_count,
    storage_footprint,
)
from ._spdm import (
    gemm_oracle,
    gemm_dense_blocked,
    spdm_csr,
    spdm_coo_profiled,
    spdm_gcoo,
)
from ._traffic import (
    ROOFLINE_PROFILES,
    roofline_profile,
    roofline_throughput,
    fit_scaling_exponent,
)
from ._matrix_market import (
    write_matrix_market,
)
from ._dataset import (
    SELECTED_MATRICES,
    SweepGrid,
    source_from_spec,
    full_sweep_grid,
    scan_dataset,
    filter_dataset,
    write_generated_suite,
)
from ._bench import (
    BenchResult,
    TrafficRow,
    dense_operand,
    run_benchmark,
    sweep,
    crossover_search,
    traffic_report,
    summarize_speedups,
    read_csv,
    write_csv,
)
from .utility import (
    EventDispatcher,
)
from .error_handler import (
    ErrorHandler,
    EXIT_USAGE,
)

_logger = logging.getLogger(__name__)

_DEFAULT_KERNELS = "dense,csr,coo,gcoo"
_DEFAULT_CROSSOVER_SPARSITIES = "0.9,0.95,0.98,0.99,0.995,0.999"
_DEFAULT_INTENSITIES = "0.25,1,4,16,64"
# powers of two from 1/16 to 256 flops per byte
_CURVE_INTENSITIES = [2.0 ** exponent for exponent in range(-4, 9)]


class _ArgumentParser(argparse.ArgumentParser):
    """Usage errors exit with code 1."""

    def error( self, message : str ) -> typing.NoReturn:
        self.print_usage( sys.stderr )
        self.exit( EXIT_USAGE, f"{self.prog}: error: {message}\n" )


def _float_list( text : str ) -> list[float]:
    try:
        return [float(item) for item in text.split( "," ) if item]
    except ValueError:
        raise argparse.ArgumentTypeError( f"expected comma separated numbers, got {text!r}" ) from None

def _enum_list( kind : type ) -> typing.Callable[[str], list]:
    def parse( text : str ) -> list:
        try:
            return [kind(item) for item in text.split( "," ) if item]
        except ValueError:
            raise argparse.ArgumentTypeError( f"expected a comma separated subset of {', '.join(k.value for k in kind)}, got {text!r}" ) from None
    return parse


def _common_options() -> argparse.ArgumentParser:
    common = _ArgumentParser( add_help=False )
    common.add_argument( "--p", type=int, default=ExecConfig.p, help="rows per group and output tile height, a power of two" )
    common.add_argument( "--b", type=int, default=ExecConfig.b, help="lane-block width, a power of two" )
    common.add_argument( "--workers", type=int, default=ExecConfig.workers, help="worker threads, 0 for one per hardware thread" )
    common.add_argument( "--schedule-seed", type=int, default=None, help="shuffle the tile schedule with this seed" )
    common.add_argument( "--seed", type=int, default=BenchConfiguration.seed, help="seed of generated matrices" )
    common.add_argument( "--reps", type=int, default=BenchConfiguration.repetitions, help="timed repetitions" )
    common.add_argument( "--warmup", type=int, default=BenchConfiguration.warmup, help="untimed warm-up runs" )
    common.add_argument( "--cache-mode", type=CacheMode, default=CacheMode.INFINITE_L2, choices=list(CacheMode), metavar="{cold,infinite_l2}" )
    common.add_argument( "--scalar", type=Scalar, default=Scalar.F32, choices=list(Scalar), metavar="{f32,f64}" )
    common.add_argument( "--out", default=None, help="output file, standard output if omitted" )
    common.add_argument( "--error-log", default=None, help="append error reports with tracebacks to this file" )
    common.add_argument( "-v", "--verbose", action="count", default=0, help="INFO logging, repeat for DEBUG" )
    return common

def _grid_options( parser : argparse.ArgumentParser ) -> None:
    parser.add_argument( "--grid", choices=["desk", "full"], default="desk", help="desk: sizes up to 2000, full: the whole synthetic sweep" )
    parser.add_argument( "--size-every", type=int, default=None, help="keep every k-th size" )
    parser.add_argument( "--sparsity-every", type=int, default=None, help="keep every k-th sparsity" )
    parser.add_argument( "--max-size", type=int, default=None )

def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = _ArgumentParser( prog="gcoo_spdm", description="GCOO sparse-dense matrix multiplication toolkit." )
    commands = parser.add_subparsers( dest="command", required=True )

    convert = commands.add_parser( "convert", parents=[common], help="print storage footprints, optionally save the converted arrays (.npz)" )
    convert.add_argument( "source", help="MatrixMarket file or gen:N:S[:SEED]" )
    convert.add_argument( "--format", type=SparseFormat, choices=list(SparseFormat), default=None, metavar="{csr,coo,gcoo}" )

    multiply = commands.add_parser( "multiply", parents=[common], help="multiply a sparse matrix by a dense one" )
    multiply.add_argument( "source", help="sparse operand, MatrixMarket file or gen:N:S[:SEED]" )
    multiply.add_argument( "--dense", default=None, help="dense operand, random with --seed if omitted" )
    multiply.add_argument( "--n-cols", type=int, default=None, help="columns of the random dense operand" )
    multiply.add_argument( "--kernel", type=Kernel, choices=list(Kernel), default=Kernel.GCOO, metavar="{oracle,dense,csr,coo,gcoo}" )

    bench = commands.add_parser( "bench", parents=[common], help="time kernels on matrices" )
    bench.add_argument( "sources", nargs="+" )
    bench.add_argument( "--kernels", type=_enum_list(Kernel), default=_enum_list(Kernel)(_DEFAULT_KERNELS) )
    bench.add_argument( "--n-cols", type=int, default=None )

    sweep_parser = commands.add_parser( "sweep", parents=[common], help="benchmark a size x sparsity grid, resumable with --out" )
    _grid_options( sweep_parser )
    sweep_parser.add_argument( "--kernels", type=_enum_list(Kernel), default=_enum_list(Kernel)(_DEFAULT_KERNELS) )

    crossover = commands.add_parser( "crossover", parents=[common], help="smallest sparsity where GCOO beats the dense kernel" )
    crossover.add_argument( "--n", type=int, default=2000 )
    crossover.add_argument( "--sparsities", type=_float_list, default=_float_list(_DEFAULT_CROSSOVER_SPARSITIES) )

    traffic = commands.add_parser( "traffic", parents=[common], help="model memory traffic" )
    traffic.add_argument( "sources", nargs="+" )
    traffic.add_argument( "--kernels", type=_enum_list(TrafficKernel), default=list(TrafficKernel) )
    traffic.add_argument( "--n-cols", type=int, default=None, help="dense operand columns, A's column count if omitted" )
    traffic.add_argument( "--fit", action="store_true", help="append fitted scaling exponents versus n" )

    roofline = commands.add_parser( "roofline", parents=[common], help="attainable throughput min(peak, r x bandwidth)" )
    roofline.add_argument( "--profile", action="append", default=None, help=f"one of {', '.join(m.name for m in ROOFLINE_PROFILES.values())}, all if omitted" )
    roofline.add_argument( "--intensity", type=_float_list, default=_float_list(_DEFAULT_INTENSITIES), help="flops per byte" )
    roofline.add_argument( "--curve", action="store_true", help="powers of two from 1/16 to 256 flops per byte" )

    generate = commands.add_parser( "generate", parents=[common], help="write a generated suite with a manifest" )
    _grid_options( generate )
    generate.add_argument( "--dir", required=True )

    dataset = commands.add_parser( "dataset", parents=[common], help="list matrices kept by the selection rules" )
    dataset.add_argument( "directory", nargs="?", default=None, help="directory of MatrixMarket files, the built-in catalog if omitted" )
    dataset.add_argument( "--min-sparsity", type=float, default=DatasetRules.min_sparsity )
    dataset.add_argument( "--max-sparsity", type=float, default=DatasetRules.max_sparsity )
    dataset.add_argument( "--min-dim", type=int, default=DatasetRules.min_dim )
    dataset.add_argument( "--max-dim", type=int, default=DatasetRules.max_dim )
    dataset.add_argument( "--allow-rectangular", action="store_true" )

    compare = commands.add_parser( "compare", parents=[common], help="summarize speedups from a bench or sweep CSV" )
    compare.add_argument( "results" )
    compare.add_argument( "--kernel", type=Kernel, choices=list(Kernel), default=Kernel.GCOO, metavar="KERNEL" )
    compare.add_argument( "--baseline", type=Kernel, choices=list(Kernel), default=Kernel.CSR, metavar="KERNEL" )

    return parser


def _exec_config( args ) -> ExecConfig:
    return ExecConfig( p=args.p, b=args.b, workers=args.workers, schedule_seed=args.schedule_seed )

def _bench_config( args ) -> BenchConfiguration:
    return BenchConfiguration( repetitions=args.reps, warmup=args.warmup, seed=args.seed, scalar=args.scalar )

def _grid( args ) -> SweepGrid:
    grid = full_sweep_grid( args.seed )
    if args.grid == "desk":
        defaults = (4, 8, 2000)
    else:
        defaults = (1, 1, None)
    size_every = defaults[0] if args.size_every is None else args.size_every
    sparsity_every = defaults[1] if args.sparsity_every is None else args.sparsity_every
    max_size = defaults[2] if args.max_size is None else args.max_size
    return grid.subsample( size_every, sparsity_every, max_size )

def _write_table( stream : typing.TextIO, table : list[list] ) -> None:
    """An empty row separates two tables."""
    csv.writer( stream, lineterminator="\n" ).writerows( table )

def _emit( args, stdout : typing.TextIO, table : list[list] ) -> None:
    if args.out is None:
        _write_table( stdout, table )
        return
    try:
        with open( args.out, "w", newline="" ) as stream:
            _write_table( stream, table )
    except OSError as e:
        raise DataError( f"Cannot write {args.out}: {e}" ) from e

def _emit_rows( args, stdout : typing.TextIO, rows : list, record : type ) -> None:
    write_csv( rows, stdout if args.out is None else args.out, record.columns() )


def _convert( args, stdout : typing.TextIO ) -> None:
    source = source_from_spec( args.source, args.seed )
    coo = source.coo( args.scalar )
    formats = list(SparseFormat) if args.format is None else [args.format]
    table = [["format", "rows", "cols", "nnz", "p", "groups", "words"]]
    for format in formats:
        p = args.p if format is SparseFormat.GCOO else 1
        footprint = storage_footprint( format, coo.rows_dim, coo.nnz, p )
        groups = group_count( coo.rows_dim, p ) if format is SparseFormat.GCOO else 0
        table.append( [format.value, coo.rows_dim, coo.cols_dim, coo.nnz, p, groups, footprint.words] )
    _write_table( stdout, table )

    if args.out is not None:
        if args.format is None:
            raise ConfigError( "Saving a conversion needs --format." )
        converted = { SparseFormat.COO: lambda: coo, SparseFormat.CSR: lambda: coo_to_csr(coo), SparseFormat.GCOO: lambda: coo_to_gcoo(coo, args.p) }[args.format]()
        try:
            with open( args.out, "wb" ) as stream:
                numpy.savez( stream, format=args.format.value, **dataclasses.asdict(converted) )
        except OSError as e:
            raise DataError( f"Cannot write {args.out}: {e}" ) from e

def _multiply( args, stdout : typing.TextIO ) -> None:
    cfg = _exec_config( args )
    source = source_from_spec( args.source, args.seed )
    a : CooMatrix = source.coo( args.scalar )
    if args.dense is not None:
        b = source_from_spec( args.dense, args.seed + 1 ).dense( args.scalar )
    else:
        b = dense_operand( a.cols_dim, a.cols_dim if args.n_cols is None else args.n_cols, args.seed, args.scalar )

    stats = None
    if args.kernel is Kernel.GCOO:
        c, stats = spdm_gcoo( coo_to_gcoo(a, cfg.p), b, cfg )
    elif args.kernel is Kernel.COO:
        c, stats = spdm_coo_profiled( a, b, cfg )
    elif args.kernel is Kernel.CSR:
        c = spdm_csr( coo_to_csr(a), b, cfg )
    elif args.kernel is Kernel.DENSE:
        c = gemm_dense_blocked( coo_to_dense(a), b, cfg )
    else:
        c = gemm_oracle( coo_to_dense(a), b )

    if args.out is not None:
        write_matrix_market( c, args.out )
    lines = [
        f"kernel={args.kernel.value}",
        f"name={source.name}",
        f"m={a.rows_dim}",
        f"k={a.cols_dim}",
        f"n={c.cols}",
        f"nnz={a.nnz}",
        f"flops={2 * a.nnz * c.cols}",
    ]
    if stats is not None:
        lines += [f"{field.name}={getattr(stats, field.name)}" for field in dataclasses.fields(stats) if field.name != "flops"]
    stdout.write( "".join( line + "\n" for line in lines ) )

def _bench( args, stdout : typing.TextIO ) -> None:
    cfg = _exec_config( args )
    bench = _bench_config( args )
    rows = []
    for spec in args.sources:
        source = source_from_spec( spec, args.seed )
        for kernel in args.kernels:
            rows.append( run_benchmark( source, kernel, cfg, bench, n_cols=args.n_cols ) )
    _emit_rows( args, stdout, rows, BenchResult )

def _sweep( args, stdout : typing.TextIO ) -> None:
    grid = _grid( args )
    total = len(grid) * len(args.kernels)
    dispatcher : EventDispatcher[BenchResult] = EventDispatcher()
    progress = [0]

    def log_progress( result : BenchResult ) -> None:
        progress[0] += 1
        _logger.info( "sweep row %d of at most %d: %s %s", progress[0], total, result.kernel.value, result.name )

    dispatcher.register( log_progress )
    rows = sweep( grid, args.kernels, _exec_config(args), _bench_config(args), out=args.out, dispatcher=dispatcher )
    if args.out is None:
        write_csv( rows, stdout, BenchResult.columns() )

def _crossover( args, stdout : typing.TextIO ) -> None:
    s = crossover_search( args.n, args.sparsities, _exec_config(args), _bench_config(args) )
    _emit( args, stdout, [["n", "crossover_sparsity"], [args.n, "none" if s is None else s]] )

def _traffic( args, stdout : typing.TextIO ) -> None:
    cfg = _exec_config( args )
    rows : list[TrafficRow] = []
    for spec in args.sources:
        source = source_from_spec( spec, args.seed )
        for kernel in args.kernels:
            rows.append( traffic_report( source, kernel, cfg, args.cache_mode, args.n_cols ) )

    columns = TrafficRow.columns()
    table = [columns, *( [row.to_row()[column] for column in columns] for row in rows )]
    if args.fit:
        table += [[], ["kernel", "cache_mode", "quantity", "exponent"]]
        for kernel in args.kernels:
            fitted = [row for row in rows if row.kernel is kernel]
            sizes = [row.m for row in fitted]
            if len(set(sizes)) < 3:
                raise ConfigError( "Fitting needs matrices of at least three different sizes." )
            for quantity, values in [
                ("n_dm", [row.n_dm for row in fitted]),
                ("total_transactions", [row.report.total_transactions() for row in fitted]),
            ]:
                table.append( [kernel.value, args.cache_mode.value, quantity, fit_scaling_exponent( sizes, values )] )
    _emit( args, stdout, table )

def _roofline( args, stdout : typing.TextIO ) -> None:
    profiles = list( ROOFLINE_PROFILES.values() ) if args.profile is None else [roofline_profile( name ) for name in args.profile]
    intensities = _CURVE_INTENSITIES if args.curve else args.intensity
    table = [["profile", "intensity", "attainable_flops", "bound"]]
    for profile in profiles:
        for r in intensities:
            bound = "compute" if r >= profile.ridge_intensity() else "memory"
            table.append( [profile.name, r, roofline_throughput( r, profile ), bound] )
    _emit( args, stdout, table )

def _generate( args, stdout : typing.TextIO ) -> None:
    manifest = write_generated_suite( _grid(args), args.dir, args.scalar )
    stdout.write( f"{manifest}\n" )

def _dataset( args, stdout : typing.TextIO ) -> None:
    rules = DatasetRules(
        square_only=not args.allow_rectangular,
        min_sparsity=args.min_sparsity,
        max_sparsity=args.max_sparsity,
        min_dim=args.min_dim,
        max_dim=args.max_dim,
    )
    records = SELECTED_MATRICES if args.directory is None else scan_dataset( args.directory )
    table = [["name", "rows", "cols", "nnz", "sparsity", "domain", "path"]]
    table += [[r.name, r.rows, r.cols, r.nnz, r.sparsity, r.domain, r.path] for r in filter_dataset( records, rules )]
    _emit( args, stdout, table )

def _compare( args, stdout : typing.TextIO ) -> None:
    summary = summarize_speedups( read_csv( args.results, BenchResult ), args.kernel, args.baseline )
    _emit( args, stdout, [
        ["kernel", "baseline", "matrices", "wins", "win_fraction", "mean_speedup", "max_speedup"],
        [summary.kernel.value, summary.baseline.value, summary.matrices, summary.wins, summary.win_fraction, summary.mean_speedup, summary.max_speedup],
    ] )


_COMMANDS : dict[str, tuple[typing.Callable, str]] = {
    "convert": (_convert, "Conversion has failed."),
    "multiply": (_multiply, "Multiplication has failed."),
    "bench": (_bench, "Benchmark has failed."),
    "sweep": (_sweep, "Sweep has failed."),
    "crossover": (_crossover, "Crossover search has failed."),
    "traffic": (_traffic, "Traffic modeling has failed."),
    "roofline": (_roofline, "Roofline report has failed."),
    "generate": (_generate, "Suite generation has failed."),
    "dataset": (_dataset, "Dataset scan has failed."),
    "compare": (_compare, "Comparison has failed."),
}

def main( argv : typing.Sequence[str] | None = None ) -> int:
    """
    Run one command.

    Returns: exit code, 0 on success, 1 on usage errors, 2 on data errors
    """
    parser = build_parser()
    try:
        args = parser.parse_args( argv )
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else 0

    logging.basicConfig(
        level=max( logging.DEBUG, logging.WARNING - 10 * args.verbose ),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    handler, context = _COMMANDS[args.command]
    return ErrorHandler( args.error_log ).handle_gracefully( handler, context, args, sys.stdout )
