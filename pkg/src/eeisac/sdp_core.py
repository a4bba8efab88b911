"""Dense conic solver for linear-objective problems over PSD cones.

Two layers live here:

* ``ConeProblem`` / ``solve`` -- the intermediate representation (free scalars,
  PSD matrix variables, linear equalities/inequalities, affine linear matrix
  inequalities) and a self-contained primal-dual path-following interior-point
  solver.  The solver uses the homogeneous self-dual embedding (so primal
  infeasibility is certified rather than guessed), Nesterov-Todd scaling and a
  Mehrotra predictor-corrector step with fraction-to-boundary 0.98.

* ``SdpModel`` -- a small modeling front end: scalar / complex-vector /
  Hermitian-matrix variables, affine expressions, and assembly of complex
  Hermitian LMIs through the real symmetric embedding
  ``[[Re H, -Im H], [Im H, Re H]]``.

Everything is dense; the intended problem sizes (matrix blocks of a few tens)
never justify sparse structure exploitation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg as sla

try:
    from threadpoolctl import threadpool_limits as _threadpool_limits
except ImportError:  # pragma: no cover
    from contextlib import nullcontext

    def _threadpool_limits(limits=None):
        return nullcontext()

# ---------------------------------------------------------------------------
# symmetric vectorization
# ---------------------------------------------------------------------------

_SQRT2 = np.sqrt(2.0)


@lru_cache(maxsize=None)
def _tri_indices(d: int):
    ii, jj = np.tril_indices(d)
    scale = np.where(ii == jj, 1.0, _SQRT2)
    return ii, jj, scale


def svec_dim(d: int) -> int:
    return d * (d + 1) // 2


def svec(x: np.ndarray) -> np.ndarray:
    """Scaled lower-triangular stacking with sqrt(2) off-diagonals, so that
    svec(X) @ svec(Y) == tr(X @ Y) for symmetric X, Y."""
    ii, jj, scale = _tri_indices(x.shape[0])
    return x[ii, jj] * scale


def smat(v: np.ndarray, d: int) -> np.ndarray:
    ii, jj, scale = _tri_indices(d)
    x = np.zeros((d, d))
    x[ii, jj] = v / scale
    x[jj, ii] = x[ii, jj]
    return x


def _smat_batch(v: np.ndarray, d: int) -> np.ndarray:
    """Columns of v (shape nbar x k) unpacked to a (k, d, d) symmetric stack."""
    ii, jj, scale = _tri_indices(d)
    k = v.shape[1]
    x = np.zeros((k, d, d))
    x[:, ii, jj] = (v / scale[:, None]).T
    x[:, jj, ii] = x[:, ii, jj]
    return x


def _svec_batch(x: np.ndarray) -> np.ndarray:
    """(k, d, d) symmetric stack packed back to (nbar, k)."""
    ii, jj, scale = _tri_indices(x.shape[1])
    return (x[:, ii, jj] * scale).T


def embed_hermitian(h: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Real symmetric embedding [[Re H, -Im H], [Im H, Re H]] of Hermitian H.

    H >= 0 iff the embedding is PSD; eigenvalues are duplicated and the trace
    doubles.  Rejects inputs that are not Hermitian within ``tol``.
    """
    h = np.asarray(h)
    scale = 1.0 + float(np.max(np.abs(h))) if h.size else 1.0
    if np.max(np.abs(h - h.conj().T)) > tol * scale:
        raise ValueError("matrix is not Hermitian within tolerance")
    re, im = h.real, h.imag
    return np.block([[re, -im], [im, re]])


# ---------------------------------------------------------------------------
# problem IR
# ---------------------------------------------------------------------------


@dataclass
class Lmi:
    """Affine map const + sum_t x_t * basis_t required PSD (real symmetric)."""

    dim: int
    const_svec: np.ndarray          # svec of the constant term, length svec_dim(dim)
    coef: np.ndarray                # svec_dim(dim) x n_var coefficient matrix


@dataclass
class ConeProblem:
    """Linear-objective problem over free scalars and PSD matrix variables.

    Variable layout: ``x = [free scalars | svec(X_1) | svec(X_2) | ...]`` with
    one svec segment per entry of ``psd_blocks``.  The objective is maximized.
    """

    n_free: int
    psd_blocks: list = field(default_factory=list)
    objective: np.ndarray | None = None
    obj_const: float = 0.0
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    A_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    lmis: list = field(default_factory=list)

    @property
    def n_var(self) -> int:
        return self.n_free + sum(svec_dim(d) for d in self.psd_blocks)

    def block_slice(self, i: int) -> slice:
        off = self.n_free + sum(svec_dim(d) for d in self.psd_blocks[:i])
        return slice(off, off + svec_dim(self.psd_blocks[i]))

    def to_text(self) -> str:
        """Plain-text dump for cross-checking against external solvers.

        Format: header lines ``free/psd_blocks/objective``, then one section
        per constraint family; dense rows are space-separated ``%.17g``.
        """
        out = [f"conic-problem n_free {self.n_free}",
               "psd_blocks " + " ".join(str(d) for d in self.psd_blocks),
               "maximize " + _row(self.objective) + f" const {self.obj_const!r}"]
        if self.A_eq is not None and len(self.A_eq):
            out.append(f"eq {len(self.A_eq)}")
            out += [_row(a) + " = " + repr(float(b))
                    for a, b in zip(self.A_eq, self.b_eq)]
        if self.A_ub is not None and len(self.A_ub):
            out.append(f"ineq {len(self.A_ub)}")
            out += [_row(a) + " <= " + repr(float(b))
                    for a, b in zip(self.A_ub, self.b_ub)]
        for lmi in self.lmis:
            out.append(f"lmi dim {lmi.dim}")
            out.append("const " + _row(lmi.const_svec))
            for t in range(lmi.coef.shape[1]):
                col = lmi.coef[:, t]
                if np.any(col):
                    out.append(f"var {t} " + _row(col))
        return "\n".join(out) + "\n"

    def dump(self, path) -> None:
        with open(path, "w") as f:
            f.write(self.to_text())


def _row(v) -> str:
    return " ".join(repr(float(x)) for x in np.atleast_1d(np.asarray(v, dtype=float)))


@dataclass(frozen=True)
class SolverOptions:
    feastol: float = 1e-7
    abstol: float = 1e-8
    reltol: float = 1e-8
    maxiter: int = 100
    step_frac: float = 0.98       # fraction-to-boundary
    record_trace: bool = False
    # 'auto' runs the fast normal-equations path and falls back to a full
    # KKT factorization if that path stalls before reaching tolerance
    kkt_mode: str = "auto"        # auto | reduced | full


@dataclass
class SolveReport:
    status: str                   # optimal | infeasible | max-iterations | numerical-failure
    objective: float
    x: np.ndarray | None
    y: np.ndarray | None          # equality duals
    z: np.ndarray | None          # cone duals (stacked nonneg + svec blocks)
    s: np.ndarray | None          # cone slacks
    iterations: int
    kkt: tuple                    # (primal res, dual res, duality gap), relative
    message: str = ""
    trace: list = field(default_factory=list)

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


# ---------------------------------------------------------------------------
# cone helper
# ---------------------------------------------------------------------------


class _Cone:
    """Bookkeeping for the product cone R+^l x PSD(d_1) x ... x PSD(d_N)."""

    def __init__(self, l: int, dims: list):
        self.l = l
        self.dims = list(dims)
        self.offs = []
        off = l
        for d in self.dims:
            self.offs.append(off)
            off += svec_dim(d)
        self.size = off
        self.degree = l + sum(self.dims)

    def identity(self) -> np.ndarray:
        e = np.zeros(self.size)
        e[:self.l] = 1.0
        for d, off in zip(self.dims, self.offs):
            e[off:off + svec_dim(d)] = svec(np.eye(d))
        return e

    def blocks(self, v: np.ndarray):
        for d, off in zip(self.dims, self.offs):
            yield d, v[off:off + svec_dim(d)]


class _Scaling:
    """Nesterov-Todd scaling point for the product cone."""

    def __init__(self, cone: _Cone, s: np.ndarray, z: np.ndarray):
        self.cone = cone
        l = cone.l
        self.w = np.sqrt(s[:l] / z[:l]) if l else np.zeros(0)
        self.lam_lin = np.sqrt(s[:l] * z[:l]) if l else np.zeros(0)
        self.R, self.Rinv, self.W2, self.W2i, self.lam_psd = [], [], [], [], []
        self.Ls, self.Lz = [], []
        for (d, sb), (_, zb) in zip(cone.blocks(s), cone.blocks(z)):
            S, Z = smat(sb, d), smat(zb, d)
            ls = _chol(S)
            lz = _chol(Z)
            u, sig, vt = np.linalg.svd(lz.T @ ls)
            sig = np.maximum(sig, 1e-300)
            r = ls @ vt.T / np.sqrt(sig)
            rinv = (u / np.sqrt(sig)).T @ lz.T   # R^{-1} = Sig^{-1/2} U^T Lz^T
            self.R.append(r)
            self.Rinv.append(rinv)
            w2 = r @ r.T
            self.W2.append(w2)
            self.W2i.append(rinv.T @ rinv)
            self.lam_psd.append(sig)
            self.Ls.append(ls)
            self.Lz.append(lz)

    # --- elementwise / blockwise operations -------------------------------

    def apply_Hinv_mat(self, g: np.ndarray) -> np.ndarray:
        """(W^T W)^{-1} applied to each column of g (cone-dim x k)."""
        out = np.empty_like(g)
        l = self.cone.l
        if l:
            out[:l] = g[:l] / (self.w ** 2)[:, None]
        for bi, (d, off) in enumerate(zip(self.cone.dims, self.cone.offs)):
            sl = slice(off, off + svec_dim(d))
            t = _smat_batch(g[sl], d)
            w2i = self.W2i[bi]
            out[sl] = _svec_batch(w2i @ t @ w2i)
        return out

    def apply_Hinv(self, v: np.ndarray) -> np.ndarray:
        return self.apply_Hinv_mat(v[:, None])[:, 0]

    def apply_Wt(self, v: np.ndarray) -> np.ndarray:
        """W^T: lin -> w*v; psd -> R smat(v) R^T."""
        out = np.empty_like(v)
        l = self.cone.l
        if l:
            out[:l] = self.w * v[:l]
        for bi, (d, off) in enumerate(zip(self.cone.dims, self.cone.offs)):
            sl = slice(off, off + svec_dim(d))
            r = self.R[bi]
            out[sl] = svec(r @ smat(v[sl], d) @ r.T)
        return out

    def scale_s(self, ds: np.ndarray) -> np.ndarray:
        """W^{-T} ds: lin -> ds/w; psd -> R^{-1} DS R^{-T}."""
        out = np.empty_like(ds)
        l = self.cone.l
        if l:
            out[:l] = ds[:l] / self.w
        for bi, (d, off) in enumerate(zip(self.cone.dims, self.cone.offs)):
            sl = slice(off, off + svec_dim(d))
            rinv = self.Rinv[bi]
            out[sl] = svec(rinv @ smat(ds[sl], d) @ rinv.T)
        return out

    def scale_z(self, dz: np.ndarray) -> np.ndarray:
        """W dz: lin -> w*dz; psd -> R^T DZ R."""
        out = np.empty_like(dz)
        l = self.cone.l
        if l:
            out[:l] = self.w * dz[:l]
        for bi, (d, off) in enumerate(zip(self.cone.dims, self.cone.offs)):
            sl = slice(off, off + svec_dim(d))
            r = self.R[bi]
            out[sl] = svec(r.T @ smat(dz[sl], d) @ r)
        return out

    def compl_rhs(self, sigma_mu: float, corr: np.ndarray | None) -> np.ndarray:
        """lambda \\ (sigma*mu*e - lambda o lambda - corr) in scaled space."""
        cone = self.cone
        out = np.empty(cone.size)
        l = cone.l
        if l:
            rhs = sigma_mu - self.lam_lin ** 2
            if corr is not None:
                rhs = rhs - corr[:l]
            out[:l] = rhs / self.lam_lin
        for bi, (d, off) in enumerate(zip(cone.dims, cone.offs)):
            sl = slice(off, off + svec_dim(d))
            lam = self.lam_psd[bi]
            rhs = np.diag(sigma_mu - lam ** 2).astype(float)
            if corr is not None:
                rhs = rhs - smat(corr[sl], d)
            denom = 0.5 * (lam[:, None] + lam[None, :])
            out[sl] = svec(rhs / denom)
        return out

    def lam_div(self, v: np.ndarray) -> np.ndarray:
        """lambda \\ v (inverse of the scaled Jordan product with lambda)."""
        cone = self.cone
        out = np.empty(cone.size)
        l = cone.l
        if l:
            out[:l] = v[:l] / self.lam_lin
        for bi, (d, off) in enumerate(zip(cone.dims, cone.offs)):
            sl = slice(off, off + svec_dim(d))
            lam = self.lam_psd[bi]
            denom = 0.5 * (lam[:, None] + lam[None, :])
            out[sl] = svec(smat(v[sl], d) / denom)
        return out

    def lam_mult(self, v: np.ndarray) -> np.ndarray:
        """lambda o v (scaled Jordan product with lambda)."""
        cone = self.cone
        out = np.empty(cone.size)
        l = cone.l
        if l:
            out[:l] = v[:l] * self.lam_lin
        for bi, (d, off) in enumerate(zip(cone.dims, cone.offs)):
            sl = slice(off, off + svec_dim(d))
            lam = self.lam_psd[bi]
            fac = 0.5 * (lam[:, None] + lam[None, :])
            out[sl] = svec(smat(v[sl], d) * fac)
        return out

    def jordan_corr(self, ds_sc: np.ndarray, dz_sc: np.ndarray) -> np.ndarray:
        """Symmetrized product of two scaled directions (Mehrotra corrector)."""
        cone = self.cone
        out = np.empty(cone.size)
        l = cone.l
        if l:
            out[:l] = ds_sc[:l] * dz_sc[:l]
        for d, off in zip(cone.dims, cone.offs):
            sl = slice(off, off + svec_dim(d))
            a, b = smat(ds_sc[sl], d), smat(dz_sc[sl], d)
            out[sl] = svec(0.5 * (a @ b + b @ a))
        return out

    def max_step_scaled(self, dv_scaled: np.ndarray) -> float:
        """Largest alpha keeping (scaled point) + alpha * dv_scaled in the cone.

        In scaled coordinates the current point is the common lambda, so the
        boundary step comes from eigenvalues of lam^{-1/2} dV lam^{-1/2}.
        """
        alpha = np.inf
        l = self.cone.l
        if l:
            r = dv_scaled[:l] / self.lam_lin
            mn = float(np.min(r)) if l else 0.0
            if mn < 0:
                alpha = min(alpha, -1.0 / mn)
        for bi, (d, off) in enumerate(zip(self.cone.dims, self.cone.offs)):
            sl = slice(off, off + svec_dim(d))
            lam_isq = 1.0 / np.sqrt(self.lam_psd[bi])
            t = smat(dv_scaled[sl], d) * np.outer(lam_isq, lam_isq)
            lam_min = float(np.linalg.eigvalsh(t)[0])
            if lam_min < 0:
                alpha = min(alpha, -1.0 / lam_min)
        return alpha


def _finite(*items) -> bool:
    return all(np.all(np.isfinite(v)) for v in items)


def _h_operator(sc: _Scaling) -> np.ndarray:
    """Dense matrix of v -> svec(W2 smat(v) W2) (H = W^T W) over cone coords."""
    cone = sc.cone
    hm = np.zeros((cone.size, cone.size))
    l = cone.l
    if l:
        hm[:l, :l] = np.diag(sc.w ** 2)
    for bi, (d, off) in enumerate(zip(cone.dims, cone.offs)):
        nbar = svec_dim(d)
        sl = slice(off, off + nbar)
        basis = _smat_batch(np.eye(nbar), d)
        w2 = sc.W2[bi]
        hm[sl, sl] = _svec_batch(w2 @ basis @ w2)
    return hm


def _chol(a: np.ndarray) -> np.ndarray:
    a = 0.5 * (a + a.T)
    jitter = 0.0
    scale = max(float(np.trace(a)) / a.shape[0], 1e-30)
    for _ in range(6):
        try:
            return np.linalg.cholesky(a + jitter * np.eye(a.shape[0]))
        except np.linalg.LinAlgError:
            jitter = max(jitter * 100.0, 1e-14 * scale)
    raise np.linalg.LinAlgError("cone iterate lost positive definiteness")


# ---------------------------------------------------------------------------
# solver
# ---------------------------------------------------------------------------


def _flatten(prob: ConeProblem):
    """IR -> (c, A, b, G, h, cone) in the internal minimize convention."""
    n = prob.n_var
    if prob.objective is None:
        raise ValueError("problem has no objective")
    c = -np.asarray(prob.objective, dtype=float)
    if c.shape != (n,):
        raise ValueError("objective length does not match the variable layout")

    A = np.zeros((0, n)) if prob.A_eq is None else np.asarray(prob.A_eq, float)
    b = np.zeros(0) if prob.b_eq is None else np.asarray(prob.b_eq, float)

    g_rows, h_rows = [], []
    if prob.A_ub is not None and len(prob.A_ub):
        g_rows.append(np.asarray(prob.A_ub, float))
        h_rows.append(np.asarray(prob.b_ub, float))
        l = len(prob.b_ub)
    else:
        l = 0
    dims = []
    for i, d in enumerate(prob.psd_blocks):
        gb = np.zeros((svec_dim(d), n))
        gb[:, prob.block_slice(i)] = -np.eye(svec_dim(d))
        g_rows.append(gb)
        h_rows.append(np.zeros(svec_dim(d)))
        dims.append(d)
    for lmi in prob.lmis:
        if lmi.coef.shape != (svec_dim(lmi.dim), n):
            raise ValueError("LMI coefficient shape mismatch")
        g_rows.append(-lmi.coef)
        h_rows.append(np.asarray(lmi.const_svec, float))
        dims.append(lmi.dim)
    if not g_rows:
        raise ValueError("problem has no cone constraints")
    G = np.vstack(g_rows)
    h = np.concatenate(h_rows)
    return c, A, b, G, h, _Cone(l, dims)


def _equilibrate(data, passes: int = 3):
    """Ruiz-style diagonal scaling of the conic data.

    Rows of the cone constraints are scaled congruently per PSD block (entry
    (i, j) by d_i * d_j) so positive semidefiniteness is preserved; linear
    rows and equality rows scale freely; variables scale columnwise.
    Returns scaled data plus the scale vectors needed to map iterates back.
    """
    c, A, b, G, h, cone = data
    n, m = len(c), len(b)
    col = np.ones(n)
    row_g = np.ones(cone.size)
    row_a = np.ones(m)
    Gs, hs, As, bs = G.copy(), h.copy(), A.copy(), b.copy()

    def block_row_scale(norms):
        """Per-row scale factors honoring the congruence structure."""
        out = np.ones(cone.size)
        l = cone.l
        out[:l] = 1.0 / np.sqrt(np.maximum(norms[:l], 1e-12))
        for d, off in zip(cone.dims, cone.offs):
            ii, jj, _ = _tri_indices(d)
            sl = slice(off, off + svec_dim(d))
            per_idx = np.full(d, 1e-12)
            np.maximum.at(per_idx, ii, norms[sl])
            np.maximum.at(per_idx, jj, norms[sl])
            dvec = 1.0 / np.sqrt(np.sqrt(per_idx))
            out[sl] = dvec[ii] * dvec[jj]
        return out

    for _ in range(passes):
        norms = np.maximum(np.max(np.abs(Gs), axis=1), np.abs(hs))
        rs = block_row_scale(norms)
        Gs *= rs[:, None]
        hs *= rs
        row_g *= rs
        if m:
            na = np.maximum(np.max(np.abs(As), axis=1), np.abs(bs))
            ra = 1.0 / np.sqrt(np.maximum(na, 1e-12))
            As *= ra[:, None]
            bs *= ra
            row_a *= ra
        stack = np.abs(Gs) if not m else np.vstack([np.abs(Gs), np.abs(As)])
        cn = np.maximum(np.max(stack, axis=0), 1e-12)
        cs = 1.0 / np.sqrt(cn)
        np.clip(cs, 1e-4, 1e4, out=cs)
        Gs *= cs[None, :]
        if m:
            As *= cs[None, :]
        col *= cs
    cssc = c * col
    obj_scale = 1.0 / max(1.0, float(np.max(np.abs(cssc))))
    return (cssc * obj_scale, As, bs, Gs, hs, cone), col, row_a, row_g, obj_scale


def solve(prob: ConeProblem, opts: SolverOptions | None = None) -> SolveReport:
    """Solve a ConeProblem; status 'optimal' certifies KKT residuals below the
    configured tolerances, 'infeasible' carries a dual improving-ray certificate.
    """
    opts = opts or SolverOptions()
    data = _flatten(prob)
    # multithreaded BLAS hurts badly at these matrix sizes
    with _threadpool_limits(limits=1):
        if opts.kkt_mode == "auto":
            rep = _run_ipm(prob, data, opts, "reduced")
            if rep.status in ("numerical-failure", "max-iterations"):
                rep2 = _run_ipm(prob, data, opts, "full")
                if rep2.status == "optimal" or rep2.status == "infeasible" or \
                        max(rep2.kkt) < max(rep.kkt):
                    return rep2
            return rep
        return _run_ipm(prob, data, opts, opts.kkt_mode)


def _run_ipm(prob: ConeProblem, data, opts: SolverOptions, mode: str) -> SolveReport:
    c0, A0, b0, G0, h0, cone = data
    (c, A, b, G, h, _), col, row_a, row_g, obj_scale = _equilibrate(data)
    n, m = len(c), len(b)
    ncone = cone.size

    x = np.zeros(n)
    y = np.zeros(m)
    s = cone.identity()
    z = cone.identity()
    tau, kappa = 1.0, 1.0
    nu = cone.degree + 1

    norm_b = 1.0 + np.linalg.norm(b0)
    norm_h = 1.0 + np.linalg.norm(h0)
    norm_c = 1.0 + np.linalg.norm(c0)

    trace = []
    best = None
    best_merit = np.inf
    merit_hist = []
    status, msg = "max-iterations", ""
    it = 0

    for it in range(opts.maxiter + 1):
        # residuals of the homogeneous system (scaled data drive the steps)
        hres_x = A.T @ y + G.T @ z + c * tau
        hres_y = -A @ x + b * tau
        hres_z = -G @ x - s + h * tau
        hres_t = c @ x + b @ y + h @ z + kappa
        mu = (s @ z + tau * kappa) / nu

        # KKT measures on the original-units deflated point
        xt = col * x / tau
        st = s / (row_g * tau)
        yt = row_a * y / (tau * obj_scale)
        zt = row_g * z / (tau * obj_scale)
        pobj = c0 @ xt
        dobj = -(b0 @ yt + h0 @ zt)
        pres = np.linalg.norm(G0 @ xt + st - h0) / norm_h
        if m:
            pres = max(pres, np.linalg.norm(A0 @ xt - b0) / norm_b)
        dres = np.linalg.norm(A0.T @ yt + G0.T @ zt + c0) / norm_c
        gap = st @ zt
        relgap = gap / max(1.0, abs(pobj))
        if opts.record_trace:
            trace.append({"iter": it, "pobj": -pobj, "dobj": -dobj,
                          "gap": gap, "pres": pres, "dres": dres, "mu": mu})
        merit = max(pres, dres, relgap)
        if merit < best_merit:
            best_merit = merit
            best = (xt.copy(), yt.copy(), zt.copy(), st.copy(),
                    pres, dres, relgap, pobj)
        merit_hist.append(merit)

        if pres <= opts.feastol and dres <= opts.feastol and \
                (gap <= opts.abstol or relgap <= opts.reltol):
            best = (xt, yt, zt, st, pres, dres, relgap, pobj)
            status = "optimal"
            break

        # stall at the numerical floor: no merit progress over a window
        if len(merit_hist) > 10 and best_merit > 0.98 * min(merit_hist[:-10]):
            status, msg = "numerical-failure", "stalled at numerical precision limits"
            break

        # infeasibility certificates, in original units
        y0u = row_a * y
        z0u = row_g * z
        hz = b0 @ y0u + h0 @ z0u
        if hz < 0:
            pinf = np.linalg.norm(A0.T @ y0u + G0.T @ z0u) / (-hz) / norm_c
            if pinf <= opts.feastol:
                status, msg = "infeasible", "dual improving ray found"
                break
        x0u = col * x
        cx = c0 @ x0u
        if cx < 0:
            dinf = max(np.linalg.norm(A0 @ x0u) if m else 0.0,
                       np.linalg.norm(G0 @ x0u + s / row_g)) / (-cx) / max(norm_b, norm_h)
            if dinf <= opts.feastol:
                status, msg = "numerical-failure", "dual infeasible (objective unbounded)"
                break

        if it == opts.maxiter:
            break
        if not np.isfinite(mu) or mu <= 1e-300:
            status, msg = "numerical-failure", "complementarity collapsed"
            break

        try:
            sc = _Scaling(cone, s, z)
        except np.linalg.LinAlgError as e:
            status, msg = "numerical-failure", str(e)
            break

        if mode == "reduced":
            # normal-equations reduction: eliminate dz through H = W^T W
            P = sc.apply_Hinv_mat(G)              # H^{-1} G
            u = sc.apply_Hinv(h)                  # H^{-1} h
            gu = G.T @ u
            hu = h @ u
            dim = n + m + 1
            kkt = np.zeros((dim, dim))
            kkt[:n, :n] = G.T @ P
            if m:
                kkt[:n, n:n + m] = A.T
                kkt[n:n + m, :n] = -A
                kkt[n:n + m, -1] = b
                kkt[-1, n:n + m] = b
            kkt[:n, -1] = c - gu
            kkt[-1, :n] = c + gu
            kkt[-1, -1] = -hu - kappa / tau
        else:
            # full quasi-definite system in (dx, dy, dz, dtau)
            hmat = _h_operator(sc)
            dim = n + m + ncone + 1
            kkt = np.zeros((dim, dim))
            kkt[:n, n + m:n + m + ncone] = G.T
            kkt[n + m:n + m + ncone, :n] = -G
            kkt[n + m:n + m + ncone, n + m:n + m + ncone] = hmat
            kkt[n + m:n + m + ncone, -1] = h
            kkt[-1, n + m:n + m + ncone] = h
            if m:
                kkt[:n, n:n + m] = A.T
                kkt[n:n + m, :n] = -A
                kkt[n:n + m, -1] = b
                kkt[-1, n:n + m] = b
            kkt[:n, -1] = c
            kkt[-1, :n] = c
            kkt[-1, -1] = -kappa / tau
        # static regularization keeps the endgame LU alive; refinement steps
        # below restore accuracy against the unregularized matrix
        reg = 1e-13 * max(1.0, float(np.max(np.abs(kkt))))
        try:
            lu, piv = sla.lu_factor(kkt + reg * np.eye(dim), check_finite=False)
        except (ValueError, np.linalg.LinAlgError) as e:
            status, msg = "numerical-failure", f"KKT factorization failed: {e}"
            break

        def newton_general(rx, ry, rz, rt, d, d_tk):
            """Solve the scaled Newton system for arbitrary right-hand sides:
            A'dy + G'dz + c*dtau = rx;  -A dx + b dtau = ry;
            -G dx - ds + h dtau = rz;   c'dx + b'dy + h'dz + dkappa = rt;
            W dz + W^{-T} ds = d;       tau*dkappa + kappa*dtau = d_tk.
            """
            r3 = rz + sc.apply_Wt(d)
            if mode == "reduced":
                rhs = np.concatenate([rx - P.T @ r3, ry,
                                      [rt - d_tk / tau - u @ r3]])
            else:
                rhs = np.concatenate([rx, ry, r3, [rt - d_tk / tau]])
            sol = sla.lu_solve((lu, piv), rhs, check_finite=False)
            resid = rhs - kkt @ sol
            if np.all(np.isfinite(resid)):
                sol = sol + sla.lu_solve((lu, piv), resid, check_finite=False)
            if mode == "reduced":
                dx, dy, dtau = sol[:n], sol[n:n + m], sol[-1]
                dz = P @ dx - u * dtau + sc.apply_Hinv(r3)
            else:
                dx, dy = sol[:n], sol[n:n + m]
                dz, dtau = sol[n + m:n + m + ncone], sol[-1]
            # ds from the third block, exact by construction
            ds = -G @ dx + h * dtau - rz
            dkappa = (d_tk - kappa * dtau) / tau
            return np.array([*dx]), dy, dz, ds, float(dtau), float(dkappa)

        def newton(sigma: float, corr: np.ndarray | None, corr_tk: float):
            d = sc.compl_rhs(sigma * mu, corr)
            d_tk = sigma * mu - tau * kappa - corr_tk
            rx = -(1 - sigma) * hres_x
            ry = -(1 - sigma) * hres_y
            rz = -(1 - sigma) * hres_z
            rt = -(1 - sigma) * hres_t
            dx, dy, dz, ds, dtau, dkappa = newton_general(rx, ry, rz, rt, d, d_tk)
            # one refinement pass against the full (unreduced) Newton system
            if _finite(dx, dz, ds, dtau, dkappa):
                ex = rx - (A.T @ dy + G.T @ dz + c * dtau)
                ey = ry - (-A @ dx + b * dtau)
                ez = rz - (-G @ dx - ds + h * dtau)
                et = rt - (c @ dx + b @ dy + h @ dz + dkappa)
                ed = d - (sc.scale_z(dz) + sc.scale_s(ds))
                etk = d_tk - (tau * dkappa + kappa * dtau)
                if _finite(ex, ey, ez, et, ed, etk):
                    cx_, cy_, cz_, cs_, ct_, ck_ = newton_general(
                        ex, ey, ez, et, ed, etk)
                    if _finite(cx_, cz_, cs_, ct_, ck_):
                        dx, dy, dz = dx + cx_, dy + cy_, dz + cz_
                        ds, dtau, dkappa = ds + cs_, dtau + ct_, dkappa + ck_
            return dx, dy, dz, ds, dtau, dkappa

        # predictor
        dxa, dya, dza, dsa, dta, dka = newton(0.0, None, 0.0)
        if not _finite(dxa, dza, dsa, dta, dka):
            status, msg = "numerical-failure", "KKT solve produced non-finite step"
            break
        dsa_sc = sc.scale_s(dsa)
        dza_sc = sc.scale_z(dza)
        a_s = sc.max_step_scaled(dsa_sc)
        a_z = sc.max_step_scaled(dza_sc)
        a_t = -tau / dta if dta < 0 else np.inf
        a_k = -kappa / dka if dka < 0 else np.inf
        alpha_aff = min(1.0, a_s, a_z, a_t, a_k)
        mu_aff = ((s + alpha_aff * dsa) @ (z + alpha_aff * dza) +
                  (tau + alpha_aff * dta) * (kappa + alpha_aff * dka)) / nu
        sigma = float(np.clip((max(mu_aff, 0.0) / mu) ** 3, 0.0, 1.0))

        # corrector / combined
        corr = sc.jordan_corr(dsa_sc, dza_sc)
        dx, dy, dz, ds, dtau, dkappa = newton(sigma, corr, dta * dka)
        if not _finite(dx, dz, ds, dtau, dkappa):
            status, msg = "numerical-failure", "KKT solve produced non-finite step"
            break

        a_s = sc.max_step_scaled(sc.scale_s(ds))
        a_z = sc.max_step_scaled(sc.scale_z(dz))
        a_t = -tau / dtau if dtau < 0 else np.inf
        a_k = -kappa / dkappa if dkappa < 0 else np.inf
        alpha = min(1.0, opts.step_frac * min(a_s, a_z, a_t, a_k))
        if not np.isfinite(alpha) or alpha <= 0:
            status, msg = "numerical-failure", "no positive step"
            break

        x += alpha * dx
        y += alpha * dy
        z += alpha * dz
        s += alpha * ds
        tau += alpha * dtau
        kappa += alpha * dkappa

        if tau < 1e-12 * max(1.0, kappa) and status == "max-iterations":
            # ray without a clean certificate yet; keep iterating until one forms
            if kappa < 1e-12:
                status, msg = "numerical-failure", "tau and kappa both collapsed"
                break

    xt, yt, zt, st, pres, dres, relgap, pobj = best
    if status == "numerical-failure":
        # numerics exhausted; the best iterate may already satisfy the
        # published optimality contract even if the stricter internal
        # targets were missed by a whisker
        if pres <= opts.feastol and dres <= opts.feastol and \
                relgap <= max(10.0 * opts.reltol, opts.feastol):
            status = "optimal"
            msg = "terminated at numerical precision limits"
    if status == "infeasible":
        return SolveReport(status=status, objective=np.nan, x=None,
                           y=row_a * y if m else np.zeros(0), z=row_g * z,
                           s=None, iterations=it, kkt=(pres, dres, relgap),
                           message=msg, trace=trace)
    obj = -(pobj) + prob.obj_const
    return SolveReport(status=status, objective=float(obj), x=xt.copy(),
                       y=yt.copy(), z=zt.copy(), s=st.copy(), iterations=it,
                       kkt=(float(pres), float(dres), float(relgap)),
                       message=msg, trace=trace)


# ---------------------------------------------------------------------------
# modeling layer
# ---------------------------------------------------------------------------


class LinExpr:
    """Real affine expression: coefficient dict over scalar components + const."""

    __slots__ = ("coef", "const")

    def __init__(self, coef=None, const=0.0):
        self.coef = dict(coef) if coef else {}
        self.const = float(const)

    @staticmethod
    def term(idx: int, c: float = 1.0) -> "LinExpr":
        return LinExpr({idx: float(c)})

    def copy(self) -> "LinExpr":
        return LinExpr(self.coef, self.const)

    def __add__(self, other):
        out = self.copy()
        if isinstance(other, LinExpr):
            for k, v in other.coef.items():
                out.coef[k] = out.coef.get(k, 0.0) + v
            out.const += other.const
        else:
            out.const += float(other)
        return out

    __radd__ = __add__

    def __neg__(self):
        return LinExpr({k: -v for k, v in self.coef.items()}, -self.const)

    def __sub__(self, other):
        return self + (-other if isinstance(other, LinExpr) else -float(other))

    def __rsub__(self, other):
        return (-self) + float(other)

    def __mul__(self, c):
        c = float(c)
        return LinExpr({k: v * c for k, v in self.coef.items()}, self.const * c)

    __rmul__ = __mul__

    def value(self, x: np.ndarray) -> float:
        return self.const + sum(v * x[k] for k, v in self.coef.items())


def as_expr(v) -> LinExpr:
    return v if isinstance(v, LinExpr) else LinExpr(const=float(v))


class CExpr:
    """Complex affine expression as a (real, imag) LinExpr pair."""

    __slots__ = ("re", "im")

    def __init__(self, re=None, im=None):
        self.re = re if isinstance(re, LinExpr) else LinExpr(const=float(re or 0.0))
        self.im = im if isinstance(im, LinExpr) else LinExpr(const=float(im or 0.0))

    def conj(self) -> "CExpr":
        return CExpr(self.re, -self.im)

    def __add__(self, other):
        other = _as_cexpr(other)
        return CExpr(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __neg__(self):
        return CExpr(-self.re, -self.im)

    def __sub__(self, other):
        return self + (-_as_cexpr(other))

    def __mul__(self, c):
        c = complex(c)
        return CExpr(self.re * c.real - self.im * c.imag,
                     self.re * c.imag + self.im * c.real)

    __rmul__ = __mul__

    def value(self, x: np.ndarray) -> complex:
        return self.re.value(x) + 1j * self.im.value(x)


def _as_cexpr(v) -> CExpr:
    if isinstance(v, CExpr):
        return v
    if isinstance(v, LinExpr):
        return CExpr(v, LinExpr())
    c = complex(v)
    return CExpr(LinExpr(const=c.real), LinExpr(const=c.imag))


class ScalarVar(LinExpr):
    def __init__(self, idx: int):
        super().__init__({idx: 1.0})
        self.idx = idx


class ComplexVectorVar:
    """Complex vector variable: dim real parts then dim imaginary parts."""

    def __init__(self, base: int, dim: int):
        self.base, self.dim = base, dim

    def entry(self, i: int) -> CExpr:
        return CExpr(LinExpr.term(self.base + i), LinExpr.term(self.base + self.dim + i))

    def inner(self, a: np.ndarray) -> CExpr:
        """a^H w as an affine complex expression."""
        out = CExpr()
        for i in range(self.dim):
            out = out + self.entry(i) * np.conj(a[i])
        return out

    def pack(self, w: np.ndarray) -> dict:
        vals = {}
        for i in range(self.dim):
            vals[self.base + i] = float(np.real(w[i]))
            vals[self.base + self.dim + i] = float(np.imag(w[i]))
        return vals

    def value(self, x: np.ndarray) -> np.ndarray:
        return (x[self.base:self.base + self.dim] +
                1j * x[self.base + self.dim:self.base + 2 * self.dim])


class HermitianVar:
    """Hermitian matrix variable: d diagonal reals, then Re/Im of the strict
    upper triangle in lexicographic order."""

    def __init__(self, base: int, dim: int):
        self.base, self.dim = base, dim
        self.pairs = [(i, j) for i in range(dim) for j in range(i + 1, dim)]
        self.npair = len(self.pairs)
        self._pair_pos = {p: t for t, p in enumerate(self.pairs)}

    @property
    def n_comp(self) -> int:
        return self.dim * self.dim

    def entry(self, i: int, j: int) -> CExpr:
        if i == j:
            return CExpr(LinExpr.term(self.base + i), LinExpr())
        if i < j:
            t = self._pair_pos[(i, j)]
            return CExpr(LinExpr.term(self.base + self.dim + t),
                         LinExpr.term(self.base + self.dim + self.npair + t))
        return self.entry(j, i).conj()

    def trace(self) -> LinExpr:
        out = LinExpr()
        for i in range(self.dim):
            out = out + LinExpr.term(self.base + i)
        return out

    def trace_form(self, C: np.ndarray) -> CExpr:
        """tr(C X) for an arbitrary (not necessarily Hermitian) C."""
        re, im = LinExpr(), LinExpr()
        for i in range(self.dim):
            re = re + LinExpr.term(self.base + i, float(np.real(C[i, i])))
            im = im + LinExpr.term(self.base + i, float(np.imag(C[i, i])))
        for t, (i, j) in enumerate(self.pairs):
            # contribution C_ij X_ji + C_ji X_ij with X_ij = re + j*im
            a, b = C[i, j], C[j, i]
            ridx = self.base + self.dim + t
            iidx = self.base + self.dim + self.npair + t
            re = re + LinExpr.term(ridx, float(np.real(a + b)))
            re = re + LinExpr.term(iidx, float(np.imag(a - b)))
            im = im + LinExpr.term(ridx, float(np.imag(a + b)))
            im = im + LinExpr.term(iidx, float(np.real(b - a)))
        return CExpr(re, im)

    def quad_form(self, a: np.ndarray, b: np.ndarray) -> CExpr:
        """a^H X b = tr(X b a^H)."""
        return self.trace_form(np.outer(b, np.conj(a)))

    def pack(self, X: np.ndarray) -> dict:
        vals = {}
        for i in range(self.dim):
            vals[self.base + i] = float(np.real(X[i, i]))
        for t, (i, j) in enumerate(self.pairs):
            vals[self.base + self.dim + t] = float(np.real(X[i, j]))
            vals[self.base + self.dim + self.npair + t] = float(np.imag(X[i, j]))
        return vals

    def value(self, x: np.ndarray) -> np.ndarray:
        X = np.zeros((self.dim, self.dim), dtype=complex)
        for i in range(self.dim):
            X[i, i] = x[self.base + i]
        for t, (i, j) in enumerate(self.pairs):
            v = x[self.base + self.dim + t] + 1j * x[self.base + self.dim + self.npair + t]
            X[i, j] = v
            X[j, i] = np.conj(v)
        return X


@dataclass
class LmiHandle:
    index: int
    dim: int            # complex dimension as modeled
    entries: list       # d x d list of CExpr


class SdpModel:
    """Incremental builder producing a ConeProblem over scalar components."""

    def __init__(self):
        self.n = 0
        self.obj = LinExpr()
        self.eqs: list[LinExpr] = []       # expr == 0
        self.ineqs: list[LinExpr] = []     # expr <= 0
        self.lmis: list[LmiHandle] = []

    # --- variables --------------------------------------------------------

    def scalar(self, nonneg: bool = False) -> ScalarVar:
        v = ScalarVar(self.n)
        self.n += 1
        if nonneg:
            self.add_ineq(-v)
        return v

    def complex_vector(self, dim: int) -> ComplexVectorVar:
        v = ComplexVectorVar(self.n, dim)
        self.n += 2 * dim
        return v

    def hermitian(self, dim: int) -> HermitianVar:
        v = HermitianVar(self.n, dim)
        self.n += v.n_comp
        return v

    # --- constraints ------------------------------------------------------

    def add_eq(self, expr: LinExpr) -> None:
        self.eqs.append(expr)

    def add_ineq(self, expr: LinExpr) -> None:
        """expr <= 0"""
        self.ineqs.append(expr)

    def add_lmi(self, entries) -> LmiHandle:
        """Entries: square array of CExpr/LinExpr/constants; the upper triangle
        (incl. diagonal) is read and mirrored Hermitian."""
        d = len(entries)
        full = [[_as_cexpr(entries[i][j]) if j >= i else None for j in range(d)]
                for i in range(d)]
        for i in range(d):
            for j in range(i):
                full[i][j] = full[j][i].conj()
        h = LmiHandle(index=len(self.lmis), dim=d, entries=full)
        self.lmis.append(h)
        return h

    def psd(self, var: HermitianVar) -> LmiHandle:
        return self.add_lmi([[var.entry(i, j) for j in range(var.dim)]
                             for i in range(var.dim)])

    def maximize(self, expr: LinExpr) -> None:
        self.obj = expr

    # --- assembly ---------------------------------------------------------

    def _lmi_to_real(self, h: LmiHandle, n: int):
        d = h.dim
        const = np.zeros((d, d), dtype=complex)
        coefs: dict[int, np.ndarray] = {}
        for i in range(d):
            for j in range(i, d):
                ce = h.entries[i][j]
                const[i, j] = ce.re.const + 1j * ce.im.const
                if i != j:
                    const[j, i] = np.conj(const[i, j])
                for k, v in ce.re.coef.items():
                    m = coefs.setdefault(k, np.zeros((d, d), dtype=complex))
                    m[i, j] += v
                    if i != j:
                        m[j, i] += v
                for k, v in ce.im.coef.items():
                    m = coefs.setdefault(k, np.zeros((d, d), dtype=complex))
                    m[i, j] += 1j * v
                    if i != j:
                        m[j, i] += -1j * v
        all_real = np.max(np.abs(const.imag)) < 1e-15 and all(
            np.max(np.abs(m.imag)) < 1e-15 for m in coefs.values())
        if all_real:
            dim = d
            cs = svec(const.real)
            coef = np.zeros((svec_dim(d), n))
            for k, m in coefs.items():
                coef[:, k] = svec(m.real)
        else:
            dim = 2 * d
            cs = svec(embed_hermitian(const))
            coef = np.zeros((svec_dim(dim), n))
            for k, m in coefs.items():
                coef[:, k] = svec(embed_hermitian(m))
        return Lmi(dim=dim, const_svec=cs, coef=coef)

    def build(self) -> ConeProblem:
        n = self.n
        obj = np.zeros(n)
        for k, v in self.obj.coef.items():
            obj[k] = v
        aeq = np.zeros((len(self.eqs), n))
        beq = np.zeros(len(self.eqs))
        for r, e in enumerate(self.eqs):
            for k, v in e.coef.items():
                aeq[r, k] = v
            beq[r] = -e.const
        aub = np.zeros((len(self.ineqs), n))
        bub = np.zeros(len(self.ineqs))
        for r, e in enumerate(self.ineqs):
            for k, v in e.coef.items():
                aub[r, k] = v
            bub[r] = -e.const
        lmis = [self._lmi_to_real(h, n) for h in self.lmis]
        return ConeProblem(n_free=n, psd_blocks=[], objective=obj,
                           obj_const=self.obj.const,
                           A_eq=aeq if len(self.eqs) else None,
                           b_eq=beq if len(self.eqs) else None,
                           A_ub=aub if len(self.ineqs) else None,
                           b_ub=bub if len(self.ineqs) else None,
                           lmis=lmis)

    # --- evaluation (tests / audits) ---------------------------------------

    def lmi_matrix(self, h: LmiHandle, x: np.ndarray) -> np.ndarray:
        d = h.dim
        out = np.zeros((d, d), dtype=complex)
        for i in range(d):
            for j in range(d):
                out[i, j] = h.entries[i][j].value(x)
        return out

    def assign(self, *val_dicts) -> np.ndarray:
        """Full component vector from {component index: value} dicts."""
        x = np.zeros(self.n)
        for d in val_dicts:
            for k, v in d.items():
                x[k] = v
        return x
