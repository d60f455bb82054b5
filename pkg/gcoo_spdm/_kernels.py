"""
Tile kernels.

Each function processes a list of tiles given as parallel arrays of tile coordinates and writes every
element of each tile's region of C exactly once. Tiles are independent, so any split of the tile
list among threads produces identical output. Scratch buffers are passed in by the caller, one set
per thread.

The conversion kernel at the end fills disjoint group ranges of preallocated GCOO arrays.
"""
import numpy
import numba


@numba.njit(cache=True, nogil=True)
def gemm_oracle_kernel( a, b, c ):
    m, k = a.shape
    n = b.shape[1]
    for i in range(m):
        for j in range(n):
            total = 0.0
            for l in range(k):
                total += numpy.float64(a[i, l]) * numpy.float64(b[l, j])
            c[i, j] = total


@numba.njit(cache=True, nogil=True)
def dense_tiles( a, b, c, tile_rows, tile_strips, p, width_b, acc ):
    m, n = c.shape
    k = a.shape[1]
    for t in range(tile_rows.shape[0]):
        row0 = tile_rows[t] * p
        col0 = tile_strips[t] * width_b
        height = min(p, m - row0)
        width = min(width_b, n - col0)
        for r in range(height):
            for lane in range(width):
                acc[r, lane] = 0
        # no zero skipping, the cost does not depend on sparsity
        for l in range(k):
            for r in range(height):
                av = a[row0 + r, l]
                for lane in range(width):
                    acc[r, lane] += av * b[l, col0 + lane]
        for r in range(height):
            for lane in range(width):
                c[row0 + r, col0 + lane] = acc[r, lane]


@numba.njit(cache=True, nogil=True)
def csr_tiles( values, col_idx, row_ptr, b, c, tile_rows, tile_strips, width_b, acc ):
    n = c.shape[1]
    loads = 0
    for t in range(tile_rows.shape[0]):
        row = tile_rows[t]
        col0 = tile_strips[t] * width_b
        width = min(width_b, n - col0)
        for lane in range(width):
            acc[lane] = 0
        for e in range(row_ptr[row], row_ptr[row + 1]):
            col = col_idx[e]
            av = values[e]
            for lane in range(width):
                acc[lane] += av * b[col, col0 + lane]
            loads += width
        for lane in range(width):
            c[row, col0 + lane] = acc[lane]
    return loads


@numba.njit(cache=True, nogil=True)
def gcoo_tiles( values, row_idx, col_idx, g_idxes, nnz_per_group, b, c, tile_groups, tile_strips, p, width_b, reuse,
                acc, bv, s_vals, s_rows, s_cols ):
    """
    One tile is a group of p rows times a strip of width_b columns of C.

    The group's entries pass through the staging buffers in chunks of at most width_b entries. For
    each staged entry the strip of B's row `col` is loaded into bv, then following entries with the
    same col reuse bv without a load. bv stays valid across a chunk refill when the run continues.
    p must be a power of two, the accumulator row is row & (p - 1).

    Returns: (b_loads_total, b_loads_reused, staging_fills) summed over the tiles
    """
    m, n = c.shape
    loads = 0
    reused = 0
    fills = 0
    for t in range(tile_groups.shape[0]):
        group = tile_groups[t]
        row0 = group * p
        col0 = tile_strips[t] * width_b
        height = min(p, m - row0)
        width = min(width_b, n - col0)
        for r in range(height):
            for lane in range(width):
                acc[r, lane] = 0

        start = g_idxes[group]
        group_nnz = nnz_per_group[group]
        bv_col = -1
        for offset in range(0, group_nnz, width_b):
            cnnz = min(width_b, group_nnz - offset)
            for s in range(cnnz):
                s_vals[s] = values[start + offset + s]
                s_rows[s] = row_idx[start + offset + s]
                s_cols[s] = col_idx[start + offset + s]
            fills += cnnz

            j = 0
            while j < cnnz:
                col = s_cols[j]
                if reuse and col == bv_col:
                    reused += width
                else:
                    for lane in range(width):
                        bv[lane] = b[col, col0 + lane]
                    loads += width
                    bv_col = col
                out = s_rows[j] & (p - 1)
                av = s_vals[j]
                for lane in range(width):
                    acc[out, lane] += av * bv[lane]

                k = 1
                if reuse:
                    while j + k < cnnz and s_cols[j + k] == col:
                        out = s_rows[j + k] & (p - 1)
                        av = s_vals[j + k]
                        for lane in range(width):
                            acc[out, lane] += av * bv[lane]
                        reused += width
                        k += 1
                j += k

        for r in range(height):
            for lane in range(width):
                c[row0 + r, col0 + lane] = acc[r, lane]
    return loads, reused, fills


@numba.njit(cache=True, nogil=True)
def gcoo_fill_groups( a, p, g_idxes, first_group, stop_group, values, row_idx, col_idx ):
    """
    Second conversion pass for groups [first_group, stop_group).

    Scanning the band of p rows column by column writes each group in (col, row) order, starting
    at its offset in g_idxes. The offsets come from counting a != 0, the same test as here.
    """
    m, k = a.shape
    for group in range(first_group, stop_group):
        row0 = group * p
        height = min(p, m - row0)
        e = g_idxes[group]
        for col in range(k):
            for r in range(height):
                v = a[row0 + r, col]
                if v != 0:
                    values[e] = v
                    row_idx[e] = row0 + r
                    col_idx[e] = col
                    e += 1
