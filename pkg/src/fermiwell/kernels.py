"""Hot kernels for the determinant-space Hamiltonian action.

The interspecies contact term couples every single excitation in species A
with every single excitation in species B through the pair-interaction
matrix; applying it dominates the runtime of the CI solver. Two
interchangeable implementations are provided:

* a numba ``@njit`` kernel parallelized over destination rows (default), and
* a vectorized pure-numpy fallback built on a gather/GEMM/scatter pipeline.

Selection is controlled by the ``FERMIWELL_BACKEND`` environment variable
(``auto`` | ``numba`` | ``numpy``) or :func:`set_backend` at runtime. Both
paths produce identical results to roundoff; ``benchmarks/bench_kernels.py``
compares their throughput.
"""

from __future__ import annotations

import os

import numpy as np

from .errors import ConfigurationError

try:
    from numba import njit, prange

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency by default
    HAS_NUMBA = False

_ENV_VAR = "FERMIWELL_BACKEND"
_backend = None


def active_backend() -> str:
    """Resolve the kernel backend, honoring the environment flag once."""
    global _backend
    if _backend is None:
        requested = os.environ.get(_ENV_VAR, "auto").lower()
        if requested not in ("auto", "numba", "numpy"):
            raise ConfigurationError(
                f"{_ENV_VAR} must be one of auto|numba|numpy, got {requested!r}"
            )
        if requested == "numba" and not HAS_NUMBA:
            raise ConfigurationError("numba backend requested but numba is not importable")
        if requested == "auto":
            _backend = "numba" if HAS_NUMBA else "numpy"
        else:
            _backend = requested
    return _backend


def set_backend(name) -> None:
    """Force a backend (``numba``/``numpy``) or reset to env resolution with None."""
    global _backend
    if name is None:
        _backend = None
        return
    if name not in ("numba", "numpy"):
        raise ConfigurationError(f"unknown backend {name!r}")
    if name == "numba" and not HAS_NUMBA:
        raise ConfigurationError("numba backend requested but numba is not importable")
    _backend = name


if HAS_NUMBA:

    @njit(cache=True, parallel=True)
    def _interaction_numba(
        out,
        coeff,
        g,
        a_ptr,
        a_src,
        a_pq,
        a_sgn,
        b_ptr,
        b_src,
        b_pq,
        b_sgn,
        w2,
    ):  # pragma: no cover - exercised through interaction_apply
        dim_a = out.shape[0]
        dim_b = out.shape[1]
        for ip in prange(dim_a):
            orow = out[ip]
            for t in range(a_ptr[ip], a_ptr[ip + 1]):
                crow = coeff[a_src[t]]
                wrow = w2[a_pq[t]]
                scale = g * a_sgn[t]
                for jp in range(dim_b):
                    acc = 0.0j
                    for u in range(b_ptr[jp], b_ptr[jp + 1]):
                        acc += b_sgn[u] * wrow[b_pq[u]] * crow[b_src[u]]
                    orow[jp] += scale * acc


def _interaction_numpy(coeff, g, singles_a, singles_b, w2):
    """Gather/GEMM/scatter formulation of the interspecies coupling.

    Builds the excitation image U[pq, I', J] = <I'|E_pq|I> C[I, J] (each
    (pq, I') slot has a unique source, so plain assignment suffices), mixes
    pairs through the interaction matrix with one GEMM, and scatters the
    species-B excitations into the output. Blocked over species-B columns to
    bound memory.
    """
    dim_a, dim_b = coeff.shape
    m2 = w2.shape[0]
    out = np.zeros_like(coeff)
    out_t = out.T  # scatter view, shape (dim_b, dim_a)

    # Keep each U block under ~128 MiB.
    block = max(1, int(128 * 2**20 / (16 * m2 * dim_a)))
    b_src = singles_b.src
    for j0 in range(0, dim_b, block):
        j1 = min(j0 + block, dim_b)
        u = np.zeros((m2, dim_a, j1 - j0), dtype=coeff.dtype)
        u[singles_a.pq, singles_a.dst] = singles_a.sign[:, None] * coeff[singles_a.src, j0:j1]
        v = (w2 @ u.reshape(m2, -1)).reshape(m2, dim_a, j1 - j0)
        sel = (b_src >= j0) & (b_src < j1)
        gathered = v[singles_b.pq[sel], :, b_src[sel] - j0]
        np.add.at(out_t, singles_b.dst[sel], (g * singles_b.sign[sel])[:, None] * gathered)
    return out


def interaction_apply(coeff, w2, singles_a, singles_b, g):
    """Apply g * sum W[pq,rs] E^A_pq E^B_rs to the coefficient matrix."""
    if active_backend() == "numba":
        out = np.zeros_like(coeff)
        _interaction_numba(
            out,
            np.ascontiguousarray(coeff),
            float(g),
            singles_a.dst_ptr,
            singles_a.src,
            singles_a.pq,
            singles_a.sign,
            singles_b.dst_ptr,
            singles_b.src,
            singles_b.pq,
            singles_b.sign,
            w2,
        )
        return out
    return _interaction_numpy(coeff, float(g), singles_a, singles_b, w2)


def one_body_apply(coeff, hmat, singles, axis):
    """Apply a one-body operator (matrix in the orbital basis) to one species.

    axis 0 acts on species A (rows), axis 1 on species B (columns). Not a hot
    path; kept vectorized numpy for both backends.
    """
    work = coeff if axis == 0 else coeff.T
    values = hmat.ravel()[singles.pq] * singles.sign
    out = np.zeros(work.shape, dtype=np.result_type(coeff.dtype, values.dtype))
    np.add.at(out, singles.dst, values[:, None] * work[singles.src])
    return out if axis == 0 else out.T
