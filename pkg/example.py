import sys
import gcoo_spdm

if __name__ == '__main__':
    cfg = gcoo_spdm.ExecConfig(
        p=4, # rows per group, a power of two
        b=64, # output tile width and staging buffer capacity
        workers=0, # one worker thread per hardware thread
    )
    bench = gcoo_spdm.BenchConfiguration( repetitions=5, warmup=2, seed=1 )

    # A matrix from a public collection works the same way: gcoo_spdm.FileSource("path/to/matrix.mtx")
    source = gcoo_spdm.GeneratedSource( n=2000, sparsity=0.995, seed=1 )

    results = [gcoo_spdm.run_benchmark( source, kernel, cfg, bench ) for kernel in [
        gcoo_spdm.Kernel.DENSE,
        gcoo_spdm.Kernel.CSR,
        gcoo_spdm.Kernel.GCOO,
    ]]
    traffic = [gcoo_spdm.traffic_report( source, kernel, cfg ) for kernel in gcoo_spdm.TrafficKernel]

    gcoo_spdm.write_csv( results, sys.stdout )
    print()
    gcoo_spdm.write_csv( traffic, sys.stdout )

    summary = gcoo_spdm.summarize_speedups( results, gcoo_spdm.Kernel.GCOO, gcoo_spdm.Kernel.CSR )
    print( f"\nGCOO vs CSR kernel speedup: {summary.mean_speedup:.2f}x" )

    rows, cols = source.pattern()
    print( f"B strip loads served by register reuse: {gcoo_spdm.reuse_ratio( rows, cols, source.shape, cfg ):.1%}" )
