import numpy
import pytest
from gcoo_spdm import (
    ExecConfig,
    CacheMode,
    Scalar,
    ConfigError,
    DataError,
    InvariantError,
    UndefinedIntensityError,
    TrafficReport,
    RooflineModel,
    ROOFLINE_PROFILES,
    roofline_profile,
    roofline_throughput,
    operational_intensity,
    bytes_per_transaction,
    count_runs,
    model_gcoo_traffic,
    model_csr_traffic,
    reuse_ratio,
    fit_scaling_exponent,
    generate_uniform_pattern,
)

TITANX = roofline_profile( "TitanX" )
GTX980 = roofline_profile( "gtx980" )

SIZES = [500, 1000, 2000, 4000, 8000]
SPARSITIES = [0.8, 0.9, 0.95, 0.99, 0.995, 0.9995]


def _empty():
    return numpy.empty( 0, dtype=numpy.int64 ), numpy.empty( 0, dtype=numpy.int64 )


def test_roofline_memory_bound():
    assert roofline_throughput( 4.0, TITANX ) == pytest.approx( 1.732e12 )

def test_roofline_compute_bound():
    assert roofline_throughput( 1000.0, GTX980 ) == GTX980.peak_flops == 4.981e12

@pytest.mark.parametrize("name", sorted(ROOFLINE_PROFILES))
def test_roofline_knee( name ):
    hardware = ROOFLINE_PROFILES[name]
    assert roofline_throughput( hardware.ridge_intensity(), hardware ) == pytest.approx( hardware.peak_flops )

def test_roofline_is_monotone_and_capped():
    intensities = numpy.geomspace( 1e-3, 1e4, 200 )
    for hardware in ROOFLINE_PROFILES.values():
        curve = [bound for _, bound in hardware.curve( intensities )]
        assert all( a <= b for a, b in zip(curve, curve[1:]) )
        assert max(curve) <= hardware.peak_flops

def test_roofline_rejects_bad_input():
    with pytest.raises( ConfigError ):
        roofline_throughput( -1.0, TITANX )
    with pytest.raises( ConfigError ):
        RooflineModel( name="broken", peak_flops=0.0, bandwidth=1e9 )
    with pytest.raises( ConfigError ):
        roofline_profile( "K80" )


def test_operational_intensity():
    assert operational_intensity( TrafficReport( flops=1024, n_dm=8 ), 32 ) == 4.0
    assert operational_intensity( TrafficReport( flops=0, n_dm=0 ), 32 ) == 0.0
    with pytest.raises( UndefinedIntensityError ):
        operational_intensity( TrafficReport( flops=10, n_dm=0 ), 32 )

def test_bytes_per_transaction():
    assert bytes_per_transaction( Scalar.F32 ) == 128
    assert bytes_per_transaction( Scalar.F64 ) == 256

def test_intensity_grows_with_density():
    def intensity( s ):
        rows, cols = generate_uniform_pattern( 4000, 4000, s, 1 )
        report = model_gcoo_traffic( rows, cols, (4000, 4000), 4000 )
        return operational_intensity( report, bytes_per_transaction(Scalar.F32) )
    assert intensity( 0.8 ) > intensity( 0.995 )

def test_report_rejects_negative_counts():
    with pytest.raises( InvariantError ):
        TrafficReport( n_l2=-1 )


@pytest.mark.parametrize("cache_mode", list(CacheMode))
def test_empty_pattern_only_stores_output( cache_mode ):
    cfg = ExecConfig( p=4, b=32 )
    gcoo = model_gcoo_traffic( *_empty(), (10, 10), 40, cfg, cache_mode )
    # 3 groups (4, 4, 2 rows) times strips of 32 and 8 columns
    assert gcoo == TrafficReport( n_dm=4 + 1 + 4 + 1 + 2 + 1 )
    csr = model_csr_traffic( *_empty(), (10, 10), 40, cfg, cache_mode )
    assert csr == TrafficReport( n_dm=10 * 2 )

def test_single_nonzero_cold():
    report = model_gcoo_traffic( [5], [17], (32, 32), 32, ExecConfig( p=4, b=32 ), CacheMode.COLD )
    assert report.n_shm == 2
    assert report.b_loads == 32
    assert report.tex_l1_trans == 0
    assert report.flops == 64
    assert report.n_l2 == 0
    # 8 groups of 4 x 32 outputs, 1 sparse-operand and 1 dense-operand transaction
    assert report.n_dm == 8 * 4 + 1 + 1

def test_diagonal_pattern_loads_more_than_column_pattern():
    cfg = ExecConfig( p=4, b=32 )
    diagonal = numpy.arange( 64 )
    diagonal_report = model_gcoo_traffic( diagonal, diagonal, (64, 64), 64, cfg )
    column_report = model_gcoo_traffic( diagonal, numpy.zeros( 64, dtype=int ), (64, 64), 64, cfg )
    assert diagonal_report.b_loads == 64 * 64
    assert column_report.b_loads == 16 * 64
    assert diagonal_report.b_loads > column_report.b_loads
    assert diagonal_report.tex_l1_trans == 0
    assert reuse_ratio( diagonal, diagonal, (64, 64), cfg ) == 0.0
    assert reuse_ratio( diagonal, numpy.zeros( 64, dtype=int ), (64, 64), cfg ) == 0.75

def test_count_runs_per_group():
    # sample matrix with p=2: columns {0,1,3} and {0,2,3}
    rows = [0, 0, 1, 2, 3, 3]
    cols = [0, 3, 1, 0, 2, 3]
    assert count_runs( rows, cols, (4, 4), 2 ).tolist() == [3, 3]
    assert count_runs( rows, cols, (4, 4), 4 ).tolist() == [4]

def test_patterns_out_of_range_are_rejected():
    with pytest.raises( DataError ):
        model_gcoo_traffic( [4], [0], (4, 4), 4 )
    with pytest.raises( DataError ):
        model_csr_traffic( [0], [-1], (4, 4), 4 )
    with pytest.raises( DataError ):
        model_gcoo_traffic( [1, 1], [2, 2], (4, 4), 4 )
    with pytest.raises( ConfigError ):
        model_gcoo_traffic( [1], [2], (4, 4), 0 )

def test_csr_never_uses_staging():
    rng = numpy.random.default_rng( 5 )
    for _ in range(20):
        n = int( rng.integers( 1, 300 ) )
        rows, cols = generate_uniform_pattern( n, n, 0.9, int( rng.integers(1000) ) )
        for cache_mode in CacheMode:
            report = model_csr_traffic( rows, cols, (n, n), n, ExecConfig(), cache_mode )
            assert report.n_shm == 0
            assert report.tex_l1_trans == 0

def test_csr_traffic_is_mostly_l2():
    rows, cols = generate_uniform_pattern( 4000, 4000, 0.995, 1 )
    report = model_csr_traffic( rows, cols, (4000, 4000), 4000 )
    assert report.n_l2 / report.total_transactions() > 0.5

def test_flops_do_not_depend_on_configuration():
    rows, cols = generate_uniform_pattern( 300, 300, 0.95, 2 )
    for p in [1, 4, 64]:
        for b in [8, 64]:
            for cache_mode in CacheMode:
                cfg = ExecConfig( p=p, b=b )
                assert model_gcoo_traffic( rows, cols, (300, 300), 77, cfg, cache_mode ).flops == 2 * len(rows) * 77
                assert model_csr_traffic( rows, cols, (300, 300), 77, cfg, cache_mode ).flops == 2 * len(rows) * 77

def test_adding_a_nonzero_never_decreases_counts():
    rng = numpy.random.default_rng( 12 )
    fields = ("n_dm", "n_l2", "n_shm", "tex_l1_trans", "flops", "b_loads")
    for _ in range(30):
        rows, cols = generate_uniform_pattern( 48, 48, 0.9, int( rng.integers(10 ** 6) ) )
        free = numpy.setdiff1d( numpy.arange( 48 * 48 ), rows * 48 + cols )
        extra = int( rng.choice( free ) )
        more_rows = numpy.append( rows, extra // 48 )
        more_cols = numpy.append( cols, extra % 48 )
        cfg = ExecConfig( p=int( rng.choice([1, 2, 8]) ), b=int( rng.choice([4, 16, 64]) ) )
        for model in (model_gcoo_traffic, model_csr_traffic):
            for cache_mode in CacheMode:
                before = model( rows, cols, (48, 48), 40, cfg, cache_mode )
                after = model( more_rows, more_cols, (48, 48), 40, cfg, cache_mode )
                for field in fields:
                    assert getattr(after, field) >= getattr(before, field), (model.__name__, field)

def test_cold_traffic_bounds_infinite_cache():
    rng = numpy.random.default_rng( 13 )
    for _ in range(20):
        rows, cols = generate_uniform_pattern( 100, 100, 0.9, int( rng.integers(10 ** 6) ) )
        for model in (model_gcoo_traffic, model_csr_traffic):
            cold = model( rows, cols, (100, 100), 100, ExecConfig( p=4, b=32 ), CacheMode.COLD )
            warm = model( rows, cols, (100, 100), 100, ExecConfig( p=4, b=32 ), CacheMode.INFINITE_L2 )
            # several strips revisit the sparse operand
            assert cold.n_dm > warm.n_dm
            assert cold.n_dm == warm.n_dm + warm.n_l2

def test_cold_equals_infinite_cache_without_revisits():
    cfg = ExecConfig( p=4, b=32 )
    rows, cols = numpy.arange( 16 ), numpy.arange( 16 )
    for model in (model_gcoo_traffic, model_csr_traffic):
        cold = model( rows, cols, (16, 16), 32, cfg, CacheMode.COLD )
        warm = model( rows, cols, (16, 16), 32, cfg, CacheMode.INFINITE_L2 )
        assert cold.n_dm == warm.n_dm
        assert warm.n_l2 == 0


def test_fit_scaling_exponent():
    xs = numpy.array( [500, 1000, 2000, 4000, 8000], dtype=float )
    assert abs( fit_scaling_exponent( xs, xs ** 2 ) - 2.0 ) < 1e-9
    assert fit_scaling_exponent( xs, 3.5 * xs ) == pytest.approx( 1.0 )
    assert fit_scaling_exponent( xs, numpy.full( 5, 7.0 ) ) == pytest.approx( 0.0, abs=1e-12 )

def test_fit_rejects_bad_points():
    with pytest.raises( DataError ):
        fit_scaling_exponent( [1, 2], [1, 4] )
    with pytest.raises( DataError ):
        fit_scaling_exponent( [1, 2, 3], [1, 0, 9] )
    with pytest.raises( DataError ):
        fit_scaling_exponent( [1, 2, 3], [1, 4] )


def _size_sweep( model, quantity ):
    ys = []
    for n in SIZES:
        rows, cols = generate_uniform_pattern( n, n, 0.995, 1 )
        ys.append( quantity( model( rows, cols, (n, n), n ) ) )
    return fit_scaling_exponent( SIZES, ys )

def _density_sweep( model, quantity ):
    ys = []
    for s in SPARSITIES:
        rows, cols = generate_uniform_pattern( 4000, 4000, s, 1 )
        ys.append( quantity( model( rows, cols, (4000, 4000), 4000 ) ) )
    return fit_scaling_exponent( [1.0 - s for s in SPARSITIES], ys )

@pytest.mark.parametrize("model", [model_gcoo_traffic, model_csr_traffic], ids=["gcoo", "csr"])
def test_dram_traffic_grows_quadratically_with_size( model ):
    assert 1.7 <= _size_sweep( model, lambda report: report.n_dm ) <= 2.3

@pytest.mark.parametrize("model", [model_gcoo_traffic, model_csr_traffic], ids=["gcoo", "csr"])
def test_total_traffic_grows_cubically_with_size( model ):
    # every tile counter scales with nnz x strips
    assert 2.7 <= _size_sweep( model, TrafficReport.total_transactions ) <= 3.3

def test_gcoo_traffic_falls_linearly_with_sparsity():
    assert 0.7 <= _density_sweep( model_gcoo_traffic, TrafficReport.total_transactions ) <= 1.3

def test_csr_traffic_falls_linearly_with_sparsity():
    assert 0.8 <= _density_sweep( model_csr_traffic, TrafficReport.total_transactions ) <= 1.2
