"""Liouvillian application kernels and index bookkeeping.

Computational basis: bit value 0 marks an excited qubit, qubit a maps to bit
weight 2**(n-1-a), so the fully excited register is dense index 0 and the
ground register is index 2**n - 1.

Two storage layouts. The dense layout is the full 2^n x 2^n matrix. The
packed layout keeps only the excitation-sector diagonal blocks, concatenated
row-major per block: the generator never couples entries (i, j) with
differing sector pairs to entries outside their own (sec_i, sec_j) block, so
a state that starts block-diagonal in excitation number stays so exactly and
the packed evolution loses nothing.
"""

import functools
from collections import defaultdict

import numpy as np
from numba import njit

_ROW_CHUNK = 256


@functools.lru_cache(maxsize=8)
def sector_layout(n):
    return _SectorLayout(n)


class _SectorLayout:
    """Index bookkeeping for the sector-block storage at a given qubit count."""

    def __init__(self, n):
        dim = 1 << n
        idx = np.arange(dim)
        exc = (n - np.bitwise_count(idx)).astype(np.int64)
        states = [idx[exc == k] for k in range(n + 1)]
        width = np.array([len(s) for s in states], dtype=np.int64)
        off = np.zeros(n + 2, dtype=np.int64)
        off[1:] = np.cumsum(width * width)
        pos = np.empty(dim, dtype=np.int64)
        for k in range(n + 1):
            pos[states[k]] = np.arange(width[k])
        transpose = np.empty(off[n + 1], dtype=np.int32)
        for k in range(n + 1):
            w = width[k]
            blk = np.arange(w * w, dtype=np.int32).reshape(w, w)
            transpose[off[k]:off[k + 1]] = np.int32(off[k]) + blk.T.ravel()
        self.n = n
        self.dim = dim
        self.sector = exc
        self.states = states
        self.width = width
        self.offsets = off
        self.position = pos
        self.size = int(off[n + 1])
        self.transpose_perm = transpose

    def packed_index(self, i, j):
        """Packed offset of dense entry (i, j); both must share a sector."""
        k = self.sector[i]
        return self.offsets[k] + self.position[i] * self.width[k] + self.position[j]

    def pack(self, dense):
        y = np.empty(self.size, dtype=complex)
        for k in range(self.n + 1):
            s = self.states[k]
            y[self.offsets[k]:self.offsets[k + 1]] = dense[np.ix_(s, s)].ravel()
        return y

    def unpack(self, y):
        dense = np.zeros((self.dim, self.dim), dtype=complex)
        for k in range(self.n + 1):
            s = self.states[k]
            w = self.width[k]
            dense[np.ix_(s, s)] = y[self.offsets[k]:self.offsets[k + 1]].reshape(w, w)
        return dense

    def block(self, y, k):
        w = self.width[k]
        return y[self.offsets[k]:self.offsets[k + 1]].reshape(w, w)

    def offblock_max(self, dense):
        """Largest |entry| outside the sector-diagonal blocks, chunked by rows."""
        worst = 0.0
        for r0 in range(0, self.dim, _ROW_CHUNK):
            r1 = min(r0 + _ROW_CHUNK, self.dim)
            mask = self.sector[r0:r1, None] != self.sector[None, :]
            chunk = np.abs(dense[r0:r1])
            chunk[~mask] = 0.0
            worst = max(worst, chunk.max())
        return worst


@functools.lru_cache(maxsize=4)
def packed_structure(n):
    """Gather-index arrays driving the packed kernels for one qubit count.

    Coefficient slots are laid out three per ordered pair (a, b), row-major:
    slot 3*(a*n+b) multiplies the left product with the no-jump generator,
    +1 its right (adjoint) product, +2 the jump transfer from sector k+1.
    """
    lay = sector_layout(n)
    idx = np.arange(lay.dim)
    sec, off, pos, width = lay.sector, lay.offsets, lay.position, lay.width

    left_rows = defaultdict(list)
    jump_groups = []
    for a in range(n):
        pa = 1 << (n - 1 - a)
        for b in range(n):
            pb = 1 << (n - 1 - b)
            q = a * n + b
            if a == b:
                rows = idx[(idx & pa) == 0]
                srows = rows
            else:
                rows = idx[((idx & pa) == 0) & ((idx & pb) != 0)]
                srows = rows + pa - pb
            for i in range(len(rows)):
                k = sec[rows[i]]
                w = width[k]
                d = off[k] + pos[rows[i]] * w
                s = off[k] + pos[srows[i]] * w
                left_rows[(d, w)].append((s, 3 * q, 3 * q + 1))
            rws = idx[(idx & pb) != 0]
            cls = idx[(idx & pa) != 0]
            for k in range(n + 1):
                rk = rws[sec[rws] == k]
                ck = cls[sec[cls] == k]
                if len(rk) == 0 or len(ck) == 0:
                    continue
                jump_groups.append((
                    3 * q + 2,
                    off[k] + pos[rk] * width[k],
                    off[k + 1] + pos[rk - pb] * width[k + 1],
                    pos[ck],
                    pos[ck - pa],
                ))

    keys = sorted(left_rows.keys())
    row_dst = np.array([k[0] for k in keys], dtype=np.int64)
    row_width = np.array([k[1] for k in keys], dtype=np.int64)
    row_ptr = np.zeros(len(keys) + 1, dtype=np.int64)
    srcs, cid_left, cid_right = [], [], []
    for i, k in enumerate(keys):
        for s, gl, gr in left_rows[k]:
            srcs.append(s)
            cid_left.append(gl)
            cid_right.append(gr)
        row_ptr[i + 1] = len(srcs)

    jg_cid = np.array([g[0] for g in jump_groups], dtype=np.int16)
    jg_rowptr = np.zeros(len(jump_groups) + 1, dtype=np.int64)
    jg_colptr = np.zeros(len(jump_groups) + 1, dtype=np.int64)
    for i, g in enumerate(jump_groups):
        jg_rowptr[i + 1] = jg_rowptr[i] + len(g[1])
        jg_colptr[i + 1] = jg_colptr[i] + len(g[3])

    return {
        "row_dst": row_dst,
        "row_width": row_width,
        "row_ptr": row_ptr,
        "row_src": np.array(srcs, dtype=np.int64),
        "cid_left": np.array(cid_left, dtype=np.int16),
        "cid_right": np.array(cid_right, dtype=np.int16),
        "jg_cid": jg_cid,
        "jg_rowptr": jg_rowptr,
        "jg_colptr": jg_colptr,
        "jump_row_dst": np.concatenate([g[1] for g in jump_groups]),
        "jump_row_src": np.concatenate([g[2] for g in jump_groups]),
        "jump_col_dst": np.concatenate([g[3] for g in jump_groups]),
        "jump_col_src": np.concatenate([g[4] for g in jump_groups]),
    }


def coefficient_vector(heff, diss):
    """Runtime coefficients for the packed/dense kernels, 3 per (a, b)."""
    n = heff.shape[0]
    coefs = np.empty(3 * n * n, dtype=complex)
    flat_h = np.asarray(heff, dtype=complex).ravel()
    flat_g = np.asarray(diss, dtype=complex).ravel()
    coefs[0::3] = -1j * flat_h
    coefs[1::3] = 1j * np.conj(flat_h)
    coefs[2::3] = flat_g
    return coefs


@njit(cache=True, fastmath=True)
def _accumulate_rows(rho, coefs, rd, rw, rptr, rsrc, rcid, out):
    for r in range(rd.shape[0]):
        d = rd[r]
        w = rw[r]
        for t in range(rptr[r], rptr[r + 1]):
            c = coefs[rcid[t]]
            s = rsrc[t]
            for q in range(w):
                out[d + q] += c * rho[s + q]
    return out


@njit(cache=True, fastmath=True)
def _accumulate_jump_blocks(rho, coefs, gcid, growptr, gcolptr, rd, rs, cd, cs, out):
    for g in range(gcid.shape[0]):
        c = coefs[gcid[g]]
        c0 = gcolptr[g]
        c1 = gcolptr[g + 1]
        for rr in range(growptr[g], growptr[g + 1]):
            d = rd[rr]
            s = rs[rr]
            for ci in range(c0, c1):
                out[d + cd[ci]] += c * rho[s + cs[ci]]
    return out


class PackedLiouvillian:
    """Master-equation generator acting on the packed sector-block vector."""

    def __init__(self, heff, diss):
        n = heff.shape[0]
        self.n = n
        self.layout = sector_layout(n)
        self.struct = packed_structure(n)
        self.coefs = coefficient_vector(heff, diss)

    def apply(self, y):
        st = self.struct
        t_perm = self.layout.transpose_perm
        out = np.zeros(self.layout.size, dtype=complex)
        _accumulate_rows(y, self.coefs, st["row_dst"], st["row_width"],
                         st["row_ptr"], st["row_src"], st["cid_left"], out)
        y_t = y[t_perm]
        out_t = np.zeros(self.layout.size, dtype=complex)
        _accumulate_rows(y_t, self.coefs, st["row_dst"], st["row_width"],
                         st["row_ptr"], st["row_src"], st["cid_right"], out_t)
        out += out_t[t_perm]
        _accumulate_jump_blocks(y, self.coefs, st["jg_cid"], st["jg_rowptr"],
                                st["jg_colptr"], st["jump_row_dst"], st["jump_row_src"],
                                st["jump_col_dst"], st["jump_col_src"], out)
        return out


@njit(cache=True)
def _dense_rhs(rho, heff, diss, nq, out):
    dim = 1 << nq
    out[:, :] = 0.0
    for a in range(nq):
        pa = 1 << (nq - 1 - a)
        for b in range(nq):
            pb = 1 << (nq - 1 - b)
            c_left = -1j * heff[a, b]
            c_right = 1j * np.conj(heff[a, b])
            c_jump = diss[a, b]
            q = pa if pa < pb else pb
            if a == b:
                for i in range(dim):
                    if i & pa == 0:
                        for j in range(dim):
                            out[i, j] += c_left * rho[i, j]
                for i in range(dim):
                    for jb in range(0, dim, 2 * pa):
                        for j in range(jb, jb + pa):
                            out[i, j] += c_right * rho[i, j]
                for i in range(dim):
                    if i & pa != 0:
                        for jb in range(pa, dim, 2 * pa):
                            for j in range(jb, jb + pa):
                                out[i, j] += c_jump * rho[i - pa, j - pa]
            else:
                sh = pa - pb
                for i in range(dim):
                    if (i & pa) == 0 and (i & pb) != 0:
                        for j in range(dim):
                            out[i, j] += c_left * rho[i + sh, j]
                for i in range(dim):
                    for jb in range(0, dim, q):
                        if (jb & pa) == 0 and (jb & pb) != 0:
                            for j in range(jb, jb + q):
                                out[i, j] += c_right * rho[i, j + sh]
                for i in range(dim):
                    if i & pb != 0:
                        for jb in range(pa, dim, 2 * pa):
                            for j in range(jb, jb + pa):
                                out[i, j] += c_jump * rho[i - pb, j - pa]
    return out


class DenseLiouvillian:
    """Same generator on the full dense matrix, for states with inter-sector
    coherences. Works on the flattened matrix so the integrator sees a vector."""

    def __init__(self, heff, diss):
        self.n = heff.shape[0]
        self.dim = 1 << self.n
        self.heff = np.ascontiguousarray(heff, dtype=complex)
        self.diss = np.ascontiguousarray(diss, dtype=complex)
        self._out = np.empty((self.dim, self.dim), dtype=complex)

    def apply(self, y):
        rho = y.reshape(self.dim, self.dim)
        _dense_rhs(rho, self.heff, self.diss, self.n, self._out)
        return self._out.ravel().copy()


def apply_liouvillian_reference(rho, heff, diss):
    """Plain-numpy generator application, the cross-check for the kernels."""
    n = heff.shape[0]
    dim = 1 << n
    idx = np.arange(dim)
    out = np.zeros((dim, dim), dtype=complex)
    for a in range(n):
        pa = 1 << (n - 1 - a)
        for b in range(n):
            pb = 1 << (n - 1 - b)
            c_left = -1j * heff[a, b]
            c_right = 1j * np.conj(heff[a, b])
            c_jump = diss[a, b]
            if a == b:
                rows = idx[(idx & pa) == 0]
                out[rows, :] += c_left * rho[rows, :]
                out[:, rows] += c_right * rho[:, rows]
                rg = idx[(idx & pa) != 0]
                out[np.ix_(rg, rg)] += c_jump * rho[np.ix_(rg - pa, rg - pa)]
            else:
                rows = idx[((idx & pa) == 0) & ((idx & pb) != 0)]
                out[rows, :] += c_left * rho[rows + pa - pb, :]
                out[:, rows] += c_right * rho[:, rows + pa - pb]
                ri = idx[(idx & pb) != 0]
                cj = idx[(idx & pa) != 0]
                out[np.ix_(ri, cj)] += c_jump * rho[np.ix_(ri - pb, cj - pa)]
    return out


@functools.lru_cache(maxsize=8)
def correlator_indices(n):
    """Gather indices for all n^2 raising/lowering correlators, packed layout.

    Entry (a, b) of the correlator matrix sums rho[m, m - p_a + p_b] over
    basis states m with qubit a excited absent and b present; the diagonal
    reduces to the excited-population sum. Returns (flat gather index array,
    segment starts) for np.add.reduceat, segments in row-major (a, b) order.
    """
    lay = sector_layout(n)
    idx = np.arange(lay.dim)
    chunks, seg = [], [0]
    for a in range(n):
        pa = 1 << (n - 1 - a)
        for b in range(n):
            pb = 1 << (n - 1 - b)
            if a == b:
                mm = idx[(idx & pa) == 0]
                nn = mm
            else:
                mm = idx[((idx & pa) == 0) & ((idx & pb) != 0)]
                nn = mm + pa - pb
            kk = lay.sector[mm]
            chunks.append(lay.offsets[kk] + lay.position[nn] * lay.width[kk]
                          + lay.position[mm])
            seg.append(seg[-1] + len(mm))
    return np.concatenate(chunks), np.array(seg[:-1], dtype=np.intp)


@functools.lru_cache(maxsize=8)
def dense_correlator_indices(n):
    """Same gather plan against the flattened dense matrix."""
    dim = 1 << n
    idx = np.arange(dim)
    chunks, seg = [], [0]
    for a in range(n):
        pa = 1 << (n - 1 - a)
        for b in range(n):
            pb = 1 << (n - 1 - b)
            if a == b:
                mm = idx[(idx & pa) == 0]
                nn = mm
            else:
                mm = idx[((idx & pa) == 0) & ((idx & pb) != 0)]
                nn = mm + pa - pb
            chunks.append(nn * dim + mm)
            seg.append(seg[-1] + len(mm))
    return np.concatenate(chunks), np.array(seg[:-1], dtype=np.intp)


def correlators_from_flat(y, n, packed):
    cidx, seg = correlator_indices(n) if packed else dense_correlator_indices(n)
    sums = np.add.reduceat(y[cidx], seg)
    return sums.reshape(n, n)


@functools.lru_cache(maxsize=8)
def diagonal_indices(n):
    """Flat packed offsets of the populations, dense-index order, plus the
    excitation count of each basis state (the closure weights)."""
    lay = sector_layout(n)
    idx = np.arange(lay.dim)
    kk = lay.sector[idx]
    flat = lay.offsets[kk] + lay.position[idx] * (lay.width[kk] + 1)
    return flat, lay.sector.astype(float)


@functools.lru_cache(maxsize=8)
def dense_diagonal_indices(n):
    dim = 1 << n
    lay = sector_layout(n)
    return np.arange(dim) * (dim + 1), lay.sector.astype(float)


@functools.lru_cache(maxsize=8)
def single_excitation_indices(n, packed=True):
    """Flat offsets of the n x n single-excitation coherence block."""
    lay = sector_layout(n)
    dim = 1 << n
    site = (dim - 1) - (1 << (n - 1 - np.arange(n)))
    if packed:
        grid = lay.packed_index(site[:, None], site[None, :])
    else:
        grid = site[:, None] * dim + site[None, :]
    return grid
