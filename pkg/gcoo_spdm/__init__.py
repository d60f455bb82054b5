import typing

from .interface import (
    SpdmError,
    ConfigError,
    DataError,
    InvariantError,
    DimensionMismatchError,
    UndefinedIntensityError,
    MatrixFormatError,
    Scalar,
    SparseFormat,
    CacheMode,
    Kernel,
    TrafficKernel,
    MatrixOrigin,
    ExecConfig,
    BenchConfiguration,
    DatasetRules,
    MatrixSource,
)
from ._matrix import (
    DenseMatrix,
    CooMatrix,
    CsrMatrix,
    GcooMatrix,
    StorageFootprint,
    storage_footprint,
    sparsity,
    dense_to_coo,
    coo_to_dense,
    dense_to_csr,
    coo_to_csr,
    csr_to_coo,
    csr_to_dense,
    dense_to_gcoo,
    coo_to_gcoo,
    gcoo_to_coo,
    gcoo_to_dense,
)
from ._spdm import (
    KernelStats,
    TimingBreakdown,
    gemm_oracle,
    gemm_dense_blocked,
    spdm_csr,
    spdm_coo,
    spdm_coo_profiled,
    spdm_gcoo,
    spdm_gcoo_auto,
)
from ._traffic import (
    RooflineModel,
    ROOFLINE_PROFILES,
    TrafficReport,
    roofline_profile,
    bytes_per_transaction,
    operational_intensity,
    roofline_throughput,
    count_runs,
    model_gcoo_traffic,
    model_csr_traffic,
    reuse_ratio,
    fit_scaling_exponent,
)
from ._matrix_market import (
    read_matrix_market,
    write_matrix_market,
)
from ._dataset import (
    GeneratedSource,
    FileSource,
    MatrixRecord,
    SweepGrid,
    SELECTED_MATRICES,
    generate_uniform_pattern,
    generate_uniform_coo,
    generate_uniform_sparse,
    source_from_spec,
    filter_dataset,
    scan_dataset,
    full_sweep_grid,
    desk_sweep_grid,
    write_generated_suite,
)
from ._bench import (
    BenchResult,
    TrafficRow,
    SpeedupSummary,
    effective_gflops,
    dense_operand,
    run_benchmark,
    sweep,
    crossover_search,
    traffic_report,
    summarize_speedups,
    read_csv,
    write_csv,
)


def run_cli( argv : typing.Sequence[str] | None = None ) -> int:
    """
    Run the command-line interface.

    Returns: exit code, 0 on success, 1 on usage errors, 2 on data errors
    """
    from ._cli import main
    return main( argv )
