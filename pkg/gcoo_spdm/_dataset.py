import csv
import dataclasses
import functools
import logging
import pathlib
import typing
import numpy
import scipy.io
from .interface import (
    Scalar,
    MatrixOrigin,
    DatasetRules,
    ConfigError,
    DataError,
    MatrixFormatError,
)
from ._matrix import (
    INDEX_DTYPE,
    DenseMatrix,
    CooMatrix,
    coo_to_dense,
    dense_to_coo,
)
from ._matrix_market import (
    read_matrix_market,
    write_matrix_market,
)

_logger = logging.getLogger(__name__)

MANIFEST_COLUMNS = ("name", "n", "sparsity", "seed", "path")


def _check_sparsity( s : float ) -> None:
    if not 0.0 <= s <= 1.0:
        raise ConfigError( f"Sparsity must lie in [0, 1], got {s}." )

def _uniform_draw( rows : int, cols : int, s : float, seed : int ) -> tuple[numpy.ndarray, numpy.random.Generator]:
    """Sorted linear positions of the nonzeros and the generator positioned for drawing their values."""
    _check_sparsity( s )
    if rows < 1 or cols < 1:
        raise ConfigError( f"Matrix dimensions must be positive, got {rows}x{cols}." )
    cells = rows * cols
    nnz = int( round( cells * (1.0 - s) ) )
    rng = numpy.random.Generator( numpy.random.PCG64(seed) )
    positions = numpy.sort( rng.choice( cells, size=nnz, replace=False ) ).astype( INDEX_DTYPE )
    return positions, rng

def generate_uniform_pattern( rows : int, cols : int, s : float, seed : int ) -> tuple[numpy.ndarray, numpy.ndarray]:
    """
    Exactly round(rows*cols*(1-s)) nonzero coordinates, sampled uniformly without replacement.

    Returns: (row_idx, col_idx) in row-major order
    """
    positions, _ = _uniform_draw( rows, cols, s, seed )
    return positions // cols, positions % cols

def generate_uniform_coo( rows : int, cols : int, s : float, seed : int, scalar : Scalar = Scalar.F32 ) -> CooMatrix:
    positions, rng = _uniform_draw( rows, cols, s, seed )
    # uniform in (0, 1], no accidental zeros
    values = (1.0 - rng.random( len(positions) )).astype( scalar.dtype )
    return CooMatrix( rows_dim=rows, cols_dim=cols, values=values, row_idx=positions // cols, col_idx=positions % cols )

def generate_uniform_sparse( n : int, s : float, seed : int, scalar : Scalar = Scalar.F32 ) -> DenseMatrix:
    """
    Square matrix with uniformly distributed nonzeros.

    The random stream is PCG64 seeded with `seed`, so identical (n, s, seed) give bitwise-identical
    matrices on every platform.
    """
    return coo_to_dense( generate_uniform_coo( n, n, s, seed, scalar ) )


@dataclasses.dataclass(frozen=True)
class GeneratedSource:
    n : int
    sparsity : float
    seed : int

    def __post_init__(self):
        _check_sparsity( self.sparsity )
        if self.n < 1:
            raise ConfigError( f"Matrix size must be positive, got {self.n}." )

    @property
    def name(self) -> str:
        return f"uniform_n{self.n}_s{self.sparsity:g}_seed{self.seed}"

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n, self.n)

    @property
    def nnz(self) -> int:
        return int( round( self.n * self.n * (1.0 - self.sparsity) ) )

    def dense( self, scalar : Scalar ) -> DenseMatrix:
        return generate_uniform_sparse( self.n, self.sparsity, self.seed, scalar )

    def coo( self, scalar : Scalar ) -> CooMatrix:
        return generate_uniform_coo( self.n, self.n, self.sparsity, self.seed, scalar )

    def pattern(self) -> tuple[numpy.ndarray, numpy.ndarray]:
        return generate_uniform_pattern( self.n, self.n, self.sparsity, self.seed )


class FileSource:
    """A MatrixMarket file, read on demand."""

    _path : pathlib.Path

    def __init__( self, path : str | pathlib.Path ):
        self._path = pathlib.Path( path )

    @property
    def path(self) -> pathlib.Path:
        return self._path

    @property
    def name(self) -> str:
        return self._path.stem

    @functools.cached_property
    def _header(self) -> tuple:
        try:
            return scipy.io.mminfo( str(self._path) )
        except OSError as e:
            raise DataError( f"Cannot read {self._path}: {e}" ) from e
        except (ValueError, IndexError) as e:
            raise MatrixFormatError( self._path, 1, f"malformed header: {e}" ) from e

    @property
    def shape(self) -> tuple[int, int]:
        return (int(self._header[0]), int(self._header[1]))

    @functools.cached_property
    def nnz(self) -> int:
        rows, _ = self.pattern()
        return len(rows)

    def _read( self, scalar : Scalar ) -> DenseMatrix | CooMatrix:
        return read_matrix_market( self._path, scalar )

    def dense( self, scalar : Scalar ) -> DenseMatrix:
        matrix = self._read( scalar )
        return matrix if isinstance( matrix, DenseMatrix ) else coo_to_dense( matrix )

    def coo( self, scalar : Scalar ) -> CooMatrix:
        matrix = self._read( scalar )
        return matrix if isinstance( matrix, CooMatrix ) else dense_to_coo( matrix )

    def pattern(self) -> tuple[numpy.ndarray, numpy.ndarray]:
        matrix = self.coo( Scalar.F64 )
        return matrix.row_idx, matrix.col_idx


def source_from_spec( spec : str, seed : int = 1 ) -> GeneratedSource | FileSource:
    """
    "gen:N:S" names a generated N x N matrix of sparsity S, anything else is a MatrixMarket path.

    An optional third field "gen:N:S:SEED" overrides `seed`.
    """
    if not spec.startswith( "gen:" ):
        return FileSource( spec )
    fields = spec.split( ":" )[1:]
    if len(fields) not in (2, 3):
        raise ConfigError( f"Generator spec must look like gen:N:S[:SEED], got {spec!r}." )
    try:
        n = int( fields[0] )
        s = float( fields[1] )
        if len(fields) == 3:
            seed = int( fields[2] )
    except ValueError:
        raise ConfigError( f"Cannot parse generator spec {spec!r}." ) from None
    return GeneratedSource( n=n, sparsity=s, seed=seed )


@dataclasses.dataclass(frozen=True)
class MatrixRecord:
    """Catalog entry of a matrix, sparsity is derived from nnz."""
    name : str
    rows : int
    cols : int
    nnz : int
    origin : MatrixOrigin = MatrixOrigin.FILE
    domain : str = ""
    path : str = ""

    @property
    def sparsity(self) -> float:
        return 1.0 - self.nnz / (self.rows * self.cols)

    @property
    def is_square(self) -> bool:
        return self.rows == self.cols

def _catalog_record( name : str, n : int, density : float, domain : str ) -> MatrixRecord:
    return MatrixRecord( name=name, rows=n, cols=n, nnz=int( round( n * n * density ) ), domain=domain )

# public matrices analyzed in detail, (name, n, nonzero fraction, problem domain)
SELECTED_MATRICES : tuple[MatrixRecord, ...] = tuple( _catalog_record( *entry ) for entry in [
    ("nemeth11", 9506, 2.31e-03, "Quantum Chemistry"),
    ("human_gene1", 22283, 2.49e-02, "Undirected Weighted Graph"),
    ("Lederberg", 8843, 5.32e-04, "Directed Multigraph"),
    ("m3plates", 11107, 5.38e-05, "Acoustics"),
    ("aug3dcqp", 35543, 6.16e-05, "2D/3D"),
    ("Trefethen_20000b", 19999, 7.18e-04, "Combinatorial"),
    ("ex37", 3565, 5.32e-03, "Computational Fluid"),
    ("g7jac020sc", 5850, 1.33e-03, "Economic"),
    ("LF10000", 19998, 1.50e-04, "Model Reduction"),
    ("epb2", 25228, 2.75e-04, "Thermal"),
    ("plbuckle", 1282, 9.71e-03, "Structural"),
    ("wang3", 26064, 2.61e-04, "Semiconductor Device"),
    ("fpga_dcop_01", 1220, 3.96e-03, "Circuit Simulation"),
    ("viscoplastic2_C_1", 32769, 3.55e-04, "Materials"),
] )

def filter_dataset( records : typing.Iterable[MatrixRecord], rules : DatasetRules = DatasetRules() ) -> list[MatrixRecord]:
    kept = []
    for record in records:
        if rules.square_only and not record.is_square:
            continue
        if not rules.min_sparsity <= record.sparsity <= rules.max_sparsity:
            continue
        if not (rules.min_dim <= record.rows <= rules.max_dim and rules.min_dim <= record.cols <= rules.max_dim):
            continue
        kept.append( record )
    return kept

def _generated_paths( directory : pathlib.Path ) -> set[pathlib.Path]:
    """Files listed in the manifest.csv of generated suites below directory."""
    paths = set()
    for manifest in directory.rglob( "manifest.csv" ):
        try:
            with open( manifest, newline="" ) as stream:
                paths.update( (manifest.parent / row["path"]).resolve() for row in csv.DictReader( stream ) )
        except (OSError, KeyError, TypeError) as e:
            _logger.warning( "ignoring manifest %s: %s", manifest, e )
    return paths

def scan_dataset( directory : str | pathlib.Path ) -> list[MatrixRecord]:
    """
    Catalog every *.mtx file below directory, unreadable files are logged and skipped.

    Files listed in a generated-suite manifest are tagged as generated.
    """
    directory = pathlib.Path( directory )
    generated = _generated_paths( directory )
    records = []
    for path in sorted( directory.rglob( "*.mtx" ) ):
        source = FileSource( path )
        origin = MatrixOrigin.GENERATED if path.resolve() in generated else MatrixOrigin.FILE
        try:
            rows, cols = source.shape
            records.append( MatrixRecord( name=source.name, rows=rows, cols=cols, nnz=source.nnz, origin=origin, path=str(path) ) )
        except DataError as e:
            _logger.warning( "skipping %s: %s", path, e )
    _logger.info( "scanned %s: %d matrices", directory, len(records) )
    return records


@dataclasses.dataclass(frozen=True)
class SweepGrid:
    sizes : tuple[int, ...]
    sparsities : tuple[float, ...]
    seed : int = 1

    def __post_init__(self):
        object.__setattr__( self, "sizes", tuple( int(n) for n in self.sizes ) )
        object.__setattr__( self, "sparsities", tuple( float(s) for s in self.sparsities ) )
        if any( a >= b for a, b in zip(self.sizes, self.sizes[1:]) ):
            raise ConfigError( "Sweep sizes must be strictly increasing." )
        if self.sizes and self.sizes[0] < 1:
            raise ConfigError( "Sweep sizes must be positive." )
        if any( not 0.0 <= s < 1.0 for s in self.sparsities ):
            raise ConfigError( "Sweep sparsities must lie in [0, 1)." )

    def __len__(self) -> int:
        return len(self.sizes) * len(self.sparsities)

    def subsample( self, size_every : int = 1, sparsity_every : int = 1, max_size : int | None = None ) -> "SweepGrid":
        """Every k-th size and sparsity, optionally capped in size."""
        if size_every < 1 or sparsity_every < 1:
            raise ConfigError( "Subsampling steps must be positive." )
        sizes = [n for n in self.sizes[::size_every] if max_size is None or n <= max_size]
        return SweepGrid( sizes=tuple(sizes), sparsities=self.sparsities[::sparsity_every], seed=self.seed )

    def points(self) -> list[tuple[int, float]]:
        return [(n, s) for n in self.sizes for s in self.sparsities]

    def sources(self) -> list[GeneratedSource]:
        return [GeneratedSource( n=n, sparsity=s, seed=self.seed ) for n, s in self.points()]


def full_sweep_grid( seed : int = 1 ) -> SweepGrid:
    """
    The synthetic sweep: sizes 400..14500 in steps of 100, sparsities 0.8..0.995 in steps of 0.005
    followed by 0.995..0.9995 in steps of 0.0005 (0.995 once).
    """
    sizes = tuple( range( 400, 14500 + 1, 100 ) )
    coarse = [round( 0.8 + i * 0.005, 4 ) for i in range(40)]
    fine = [round( 0.995 + i * 0.0005, 4 ) for i in range(10)]
    sparsities = tuple( sorted( set(coarse) | set(fine) ) )
    return SweepGrid( sizes=sizes, sparsities=sparsities, seed=seed )

def desk_sweep_grid( seed : int = 1 ) -> SweepGrid:
    """A subsample of the synthetic sweep that runs on a workstation in minutes."""
    return full_sweep_grid( seed ).subsample( size_every=4, sparsity_every=8, max_size=2000 )


def write_generated_suite( grid : SweepGrid, directory : str | pathlib.Path, scalar : Scalar = Scalar.F64 ) -> pathlib.Path:
    """
    Write every grid point as a MatrixMarket file plus a manifest.csv.

    Returns: manifest path
    """
    directory = pathlib.Path( directory )
    directory.mkdir( parents=True, exist_ok=True )
    manifest = directory / "manifest.csv"
    with open( manifest, "w", newline="" ) as stream:
        writer = csv.writer( stream )
        writer.writerow( MANIFEST_COLUMNS )
        for source in grid.sources():
            path = directory / f"{source.name}.mtx"
            write_matrix_market( source.coo(scalar), path )
            writer.writerow( [source.name, source.n, repr(source.sparsity), source.seed, path.name] )
            _logger.info( "generated %s", path )
    return manifest
