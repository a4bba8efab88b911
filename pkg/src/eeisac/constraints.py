"""Optimization fragments for the beamforming subproblems.

Every builder adds variables/constraints to an ``SdpModel`` and returns the
expressions or LMI handles it created so callers (and the tests) can evaluate
them at concrete points.

Conventions used throughout:

* ``Q_k = h_k h_k^H`` is the rank-one channel Gram matrix of user k; all SINR
  quantities appear in linearized trace form ``tr(Q_k W_j)``.
* Angle-accuracy constraints are expressed through the Schur-complement block
  of the Fisher quadratic-form bundle ``F``; bounds are given in "F units", so
  a bound expression ``t`` means ``F(sum_k W_k) >= t``.  The inverse CRB in
  natural units is ``2 L |alpha|^2 / sigma_s^2`` times that quantity.
* Concave log terms are maximized through piecewise-chord hypographs: chords
  of a concave function lie below it, so each subproblem optimizes a global
  under-estimator that is tight at the expansion point.  That keeps every
  subproblem a plain SDP while preserving the ascent/monotonicity arguments
  of the outer loops.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .scenario import ChannelSet, SystemConfig
from .sdp_core import CExpr, ComplexVectorVar, HermitianVar, LinExpr, SdpModel
from .steering import steering, steering_derivative

LN2 = float(np.log(2.0))


@dataclass
class LinearizationPoint:
    """Previous-iterate data every SCA cut is expanded around."""

    w_prev: list                                  # per-user complex M-vectors
    scalars_prev: dict = field(default_factory=dict)

    def validate(self) -> None:
        for w in self.w_prev:
            if not np.all(np.isfinite(w)):
                raise ValueError("linearization point contains non-finite entries")
        for name, v in self.scalars_prev.items():
            if name in ("phi", "p_e", "q_e") or name.startswith(("psi", "tau")):
                if not (v > 0):
                    raise ValueError(f"linearization scalar {name} must be > 0")


@dataclass
class BeamVars:
    """Variables of one subproblem: per-user covariances, optional per-user
    vectors (rank-one machinery) and optional probing covariance."""

    model: SdpModel
    W: list                       # K HermitianVar, M x M
    w: list | None = None         # K ComplexVectorVar
    R: HermitianVar | None = None

    def rx_trace_form(self, C: np.ndarray) -> CExpr:
        """tr(C Rx) with Rx = sum_k W_k (+ R)."""
        e = CExpr()
        for Wk in self.W:
            e = e + Wk.trace_form(C)
        if self.R is not None:
            e = e + self.R.trace_form(C)
        return e

    def power_expr(self) -> LinExpr:
        e = LinExpr()
        for Wk in self.W:
            e = e + Wk.trace()
        if self.R is not None:
            e = e + self.R.trace()
        return e

    def assign(self, W_vals, w_vals=None, R_val=None, extra=None) -> np.ndarray:
        dicts = [self.W[k].pack(W_vals[k]) for k in range(len(self.W))]
        if w_vals is not None and self.w is not None:
            dicts += [self.w[k].pack(w_vals[k]) for k in range(len(self.w))]
        if R_val is not None and self.R is not None:
            dicts.append(self.R.pack(R_val))
        if extra:
            dicts.append(extra)
        return self.model.assign(*dicts)


def beamformer_vars(model: SdpModel, cfg: SystemConfig, *,
                    vectors: bool = True, probe: bool = False) -> BeamVars:
    W = [model.hermitian(cfg.M) for _ in range(cfg.K)]
    w = [model.complex_vector(cfg.M) for _ in range(cfg.K)] if vectors else None
    R = model.hermitian(cfg.M) if probe else None
    if R is not None:
        model.psd(R)
    return BeamVars(model=model, W=W, w=w, R=R)


def power_budget(model: SdpModel, vars_: BeamVars, cfg: SystemConfig) -> LinExpr:
    """Transmit power budget tr(Rx) <= Pmax; returns the power expression."""
    p = vars_.power_expr()
    model.add_ineq(p - cfg.Pmax)
    return p


def sinr_sdr(model: SdpModel, vars_: BeamVars, channels: ChannelSet,
             cfg: SystemConfig, include_probe: bool = False) -> list:
    """Linearized SINR constraints tr(Q_k W_k) - gamma_k * (interference) >=
    gamma_k sigma_c^2; returns the slack expressions (>= 0 when satisfied)."""
    rows = []
    for k in range(cfg.K):
        q = np.outer(channels.h[k], channels.h[k].conj())
        row = vars_.W[k].trace_form(q).re
        gk = cfg.gamma[k]
        for j in range(cfg.K):
            if j != k:
                row = row - vars_.W[j].trace_form(q).re * gk
        if include_probe and vars_.R is not None:
            row = row - vars_.R.trace_form(q).re * gk
        row = row - gk * cfg.sigma_c2
        model.add_ineq(-row)
        rows.append(row)
    return rows


def rank1_lemma_constraints(model: SdpModel, vars_: BeamVars, k: int,
                            w_bar: np.ndarray, slack: LinExpr | None = None):
    """Rank-one coupling of (W_k, w_k): the lifted block [[W_k, w_k],
    [w_k^H, 1]] >= 0, W_k >= 0, and the concave-cut surrogate of
    tr(W_k) <= w_k^H w_k expanded at w_bar.

    With ``slack`` the cut is softened to <= slack (penalty warm-up form).
    Returns a dict with the LMI handles and the cut expression.
    """
    Wk, wk = vars_.W[k], vars_.w[k]
    m_tx = Wk.dim
    entries = [[Wk.entry(i, j) for j in range(m_tx)] + [wk.entry(i)]
               for i in range(m_tx)]
    entries.append([wk.entry(j).conj() for j in range(m_tx)] + [CExpr(1.0)])
    lifted = model.add_lmi(entries)
    psd = model.psd(Wk)
    cut = Wk.trace() + float(np.real(w_bar.conj() @ w_bar)) \
        - wk.inner(w_bar).re * 2.0
    model.add_ineq(cut if slack is None else cut - slack)
    return {"lifted": lifted, "psd": psd, "cut": cut}


def crb_schur_lmi(model: SdpModel, vars_: BeamVars, channels: ChannelSet,
                  cfg: SystemConfig, bound):
    """Schur-complement block enforcing F(sum_k W_k^T forms) >= bound.

    ``bound`` is either a CRB value in rad^2 (converted to F units here) or a
    LinExpr already in F units (variable-threshold forms).  Returns the LMI
    handle and the F-unit constant actually used.
    """
    a = steering(channels.theta, cfg.M)
    da = steering_derivative(channels.theta, cfg.M)
    # tr(Rx^T C) = tr(Rx C^T): transposed coefficient matrices throughout
    c_gg = np.outer(a, a.conj()).T
    c_sd = np.outer(da, a.conj()).T       # a^H Rx^T a'
    c_dd = np.outer(da, da.conj()).T
    nd2 = float(np.real(da.conj() @ da))
    g = vars_.rx_trace_form(c_gg)
    s = vars_.rx_trace_form(c_sd)
    dd = vars_.rx_trace_form(c_dd)
    f_expr = dd.re * cfg.M + g.re * nd2
    if isinstance(bound, LinExpr):
        corner = f_expr - bound
        const = None
    else:
        if not np.isfinite(bound):
            return None, 0.0
        const = cfg.sigma_s2 / (2.0 * cfg.L * bound * abs(channels.alpha) ** 2)
        corner = f_expr - const
    rt = np.sqrt(cfg.M)
    handle = model.add_lmi([[corner, s * rt], [s.conj() * rt, g.re]])
    return handle, const


def concave_chords(model: SdpModel, z: LinExpr, u: LinExpr, fn, knots) -> None:
    """Hypograph of a concave increasing fn via its chords: z <= chord_j(u)
    for consecutive knot pairs plus a flat cap beyond the last knot.

    Chords of a concave function never exceed it, so any feasible z satisfies
    z <= fn(u) for u >= knots[0]; equality is achievable exactly at the knots.
    """
    vals = [fn(k) for k in knots]
    for (k0, v0), (k1, v1) in zip(zip(knots, vals), zip(knots[1:], vals[1:])):
        slope = (v1 - v0) / (k1 - k0)
        # z <= v0 + slope (u - k0)
        model.add_ineq(z - u * slope - (v0 - slope * k0))
    model.add_ineq(z - vals[-1])


def _knot_ladder(center: float, lo: float) -> list:
    """Knot grid hugging the expansion point with a widening tail."""
    c = max(center, lo + 1e-9)
    span = max(c - lo, 1e-3)
    rel = [lo, c - 0.75 * span, c - 0.5 * span, c - 0.25 * span, c,
           c + 0.3 * span, c + 0.7 * span, c + 1.5 * span, c + 3.0 * span,
           c + 7.0 * span, c + 15.0 * span]
    out = []
    for k in rel:
        k = max(k, lo)
        if not out or k > out[-1] + 1e-12 * max(1.0, abs(out[-1])):
            out.append(k)
    return out


def quad_transform_objective(model: SdpModel, vars_: BeamVars,
                             channels: ChannelSet, t: np.ndarray, lam: float,
                             cfg: SystemConfig, u_prev: np.ndarray):
    """Per-user quadratic-transform surrogate of the rate at fixed multipliers
    t, hypographed through log2 chords, minus lam * consumed power.

    u_k = 2 t_k Re(h_k^H w_k) - t_k^2 B_k(W)  with B_k the trace-form
    interference-plus-noise; u_k >= 0 is enforced so the chord family is a
    global under-estimator.  Sets the model objective and returns the pieces.
    """
    z_vars = []
    u_exprs = []
    obj = LinExpr()
    for k in range(cfg.K):
        q = np.outer(channels.h[k], channels.h[k].conj())
        b = LinExpr(const=cfg.sigma_c2)
        for j in range(cfg.K):
            if j != k:
                b = b + vars_.W[j].trace_form(q).re
        u = vars_.w[k].inner(channels.h[k]).re * (2.0 * t[k]) - b * (t[k] ** 2)
        model.add_ineq(-u)
        z = model.scalar()
        concave_chords(model, z, u, lambda v: float(np.log2(1.0 + v)),
                       _knot_ladder(u_prev[k], 0.0))
        z_vars.append(z)
        u_exprs.append(u)
        obj = obj + z
    power = vars_.power_expr()
    obj = obj - (power * (1.0 / cfg.eps_pa) + cfg.P0) * lam
    model.maximize(obj)
    return {"z": z_vars, "u": u_exprs, "power": power}


def epigraph_sensing_point(model: SdpModel, vars_: BeamVars,
                           channels: ChannelSet, cfg: SystemConfig,
                           lin: LinearizationPoint):
    """Auxiliary-variable chain for maximizing inverse-CRB per joule.

    Builds, in F units: omega <= zeta^2 / phi (cut), zeta^2 <= t (exact 2x2
    block), F >= t (Schur LMI), phi >= consumed power, and the SINR chain
    gamma_k <= tau_k^2 / psi_k (cut) where tau_k >= 0 is the lifted signal
    amplitude (tau_k^2 <= tr(Q_k W_k), i.e. |h_k^H w_k| after the phase
    rotation that makes it real).  Returns the variable handles.
    """
    lin.validate()
    sp = lin.scalars_prev
    phi_n, zeta_n = sp["phi"], sp["zeta"]
    if not (phi_n > 0 and zeta_n > 0):
        raise ValueError("sensing-chain linearization needs phi, zeta > 0")

    t_f = model.scalar(nonneg=True)
    zeta = model.scalar(nonneg=True)
    phi = model.scalar(nonneg=True)
    omega = model.scalar()

    # phi dominates the consumed power
    power = vars_.power_expr()
    model.add_ineq(power * (1.0 / cfg.eps_pa) + cfg.P0 - phi)
    # zeta^2 <= t_f
    model.add_lmi([[LinExpr(const=1.0), zeta], [zeta, t_f]])
    # Fisher bundle dominates t_f
    crb_handle, _ = crb_schur_lmi(model, vars_, channels, cfg, t_f + 0.0)
    # omega under-estimator of zeta^2/phi at (zeta_n, phi_n)
    r = zeta_n / phi_n
    omega_cut = omega - zeta * (2.0 * r) + phi * (r ** 2)
    model.add_ineq(omega_cut)

    taus, psis, sinr_cuts = [], [], []
    for k in range(cfg.K):
        hk = channels.h[k]
        q = np.outer(hk, hk.conj())
        tau_k = model.scalar(nonneg=True)
        model.add_lmi([[LinExpr(const=1.0), tau_k],
                       [tau_k, vars_.W[k].trace_form(q).re]])
        psi_k = model.scalar(nonneg=True)
        interf = LinExpr(const=cfg.sigma_c2)
        for j in range(cfg.K):
            if j != k:
                interf = interf + vars_.W[j].trace_form(q).re
        model.add_ineq(interf - psi_k)
        tn, pn = sp[f"tau_{k}"], sp[f"psi_{k}"]
        rk = tn / pn
        cut = -tau_k * (2.0 * rk) + psi_k * (rk ** 2) + cfg.gamma[k]
        model.add_ineq(cut)
        taus.append(tau_k)
        psis.append(psi_k)
        sinr_cuts.append(cut)

    model.maximize(omega + 0.0)
    return {"omega": omega, "zeta": zeta, "phi": phi, "t_f": t_f,
            "tau": taus, "psi": psis, "power": power,
            "omega_cut": omega_cut, "sinr_cuts": sinr_cuts,
            "crb_lmi": crb_handle}


def trace_inverse_epigraph(model: SdpModel, vars_: BeamVars, cfg: SystemConfig):
    """Y >= Rx^{-1} through the block [[Rx, I], [I, Y]] >= 0; returns
    (Y variable, its trace expression)."""
    m_tx = cfg.M
    y = model.hermitian(m_tx)
    entries = []
    for i in range(m_tx):
        row = []
        for j in range(m_tx):
            row.append(vars_.rx_trace_form(_unit(m_tx, i, j)))
        for j in range(m_tx):
            row.append(CExpr(1.0) if i == j else CExpr())
        entries.append(row)
    for i in range(m_tx):
        row = [CExpr(1.0) if i == j else CExpr() for j in range(m_tx)]
        row += [y.entry(i, j) for j in range(m_tx)]
        entries.append(row)
    handle = model.add_lmi(entries)
    return y, y.trace(), handle


def _unit(n: int, i: int, j: int) -> np.ndarray:
    """Coefficient matrix picking entry (i, j) of a Hermitian variable:
    tr(C X) = X_ij for C = e_j e_i^T."""
    c = np.zeros((n, n), dtype=complex)
    c[j, i] = 1.0
    return c


def extended_target_fragments(model: SdpModel, vars_: BeamVars,
                              channels: ChannelSet, cfg: SystemConfig, *,
                              mode: str, lam: float = 0.0,
                              b: np.ndarray | None = None,
                              v_prev: np.ndarray | None = None,
                              p_prev: float = 1.0, q_prev: float = 1.0,
                              crb_bound: float | None = None):
    """Objective and constraints for the extended-target problems.

    mode 'comm': rate surrogate sum_k [log2(v_k chords) + log2(b_k)
    + (1 - b_k a_k)/ln2] - lam * consumed power, subject to the
    trace-inverse CRB bound.  mode 'sense': minimize the tangent
    surrogate of log(p) + log(q) with epigraphs p >= sigma_s^2 M * power,
    q >= tr(Rx^{-1}).
    """
    y, tr_y, y_handle = trace_inverse_epigraph(model, vars_, cfg)
    out = {"Y": y, "y_lmi": y_handle}
    power = vars_.power_expr()
    out["power"] = power
    crb_scale = cfg.sigma_s2 * cfg.M / cfg.L

    if mode == "comm":
        if crb_bound is not None and np.isfinite(crb_bound):
            model.add_ineq(tr_y * crb_scale - crb_bound)
        obj = LinExpr()
        zs, vs = [], []
        for k in range(cfg.K):
            hk = channels.h[k]
            q = np.outer(hk, hk.conj())
            v_k = vars_.rx_trace_form(q).re + cfg.sigma_c2   # total rx power
            a_k = v_k - vars_.W[k].trace_form(q).re          # interference+noise
            z = model.scalar()
            concave_chords(model, z, v_k, lambda v: float(np.log2(v)),
                           _knot_ladder(v_prev[k], cfg.sigma_c2))
            obj = obj + z + float(np.log2(b[k])) + (1.0 - a_k * b[k]) * (1.0 / LN2)
            zs.append(z)
            vs.append(v_k)
        obj = obj - (power * (1.0 / cfg.eps_pa) + cfg.P0) * lam
        model.maximize(obj)
        out.update({"z": zs, "v": vs})
    elif mode == "sense":
        p_e = model.scalar(nonneg=True)
        q_e = model.scalar(nonneg=True)
        model.add_ineq((power * (1.0 / cfg.eps_pa) + cfg.P0)
                       * (cfg.sigma_s2 * cfg.M) - p_e)
        model.add_ineq(tr_y - q_e)
        if crb_bound is not None and np.isfinite(crb_bound):
            model.add_ineq(q_e * crb_scale - crb_bound)
        # minimize the tangent of ln p + ln q at (p_prev, q_prev)
        model.maximize(p_e * (-1.0 / p_prev) + q_e * (-1.0 / q_prev))
        out.update({"p_e": p_e, "q_e": q_e})
    else:
        raise ValueError("mode must be 'comm' or 'sense'")
    return out


def penalty_objective(model: SdpModel, base_obj: LinExpr, slacks: list,
                      p_bar: float) -> None:
    """base objective minus p_bar * sum of cut slacks (warm-up phase)."""
    obj = base_obj
    for s in slacks:
        obj = obj - s * p_bar
    model.maximize(obj)
