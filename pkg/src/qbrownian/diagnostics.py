"""Measurements the positivity claims hinge on.

Positivity reports, purity and its rate (with a mandatory independent
finite-difference oracle), Gaussian moments, a moment-matched Gaussian
reference for the gaussianity defect, trace distance, and stationarity
residuals. Eigenvalue computations always use Hermitized inputs and the
Hermiticity defect is reported so silent symmetrization cannot mask a bug.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .operators import Operator, StateMatrix, ensure_same_basis, operator_function
from .params import PhysParams


@dataclass
class DiagnosticsRow:
    """One sampled instant of a trajectory; serializes to the CSV schema."""

    t: float
    trace: complex
    purity: float
    min_eig: float
    herm_defect: float
    mean_q: float = math.nan
    mean_p: float = math.nan
    var_q: float = math.nan
    var_p: float = math.nan
    cov_qp: float = math.nan
    d_approx: float = math.nan
    gauss_defect: float = math.nan

    CSV_HEADER = ("t,trace_re,trace_im,purity,min_eig,herm_defect,"
                  "mean_q,mean_p,var_q,var_p,cov_qp,D_approx,gauss_defect")

    def csv_values(self) -> list:
        return [self.t, self.trace.real, self.trace.imag, self.purity,
                self.min_eig, self.herm_defect, self.mean_q, self.mean_p,
                self.var_q, self.var_p, self.cov_qp, self.d_approx,
                self.gauss_defect]


def _hermitized(mat: np.ndarray) -> np.ndarray:
    return 0.5 * (mat + mat.conj().T)


def positivity_report(rho: StateMatrix, tol: float = 1e-10) -> dict:
    """Minimum eigenvalue of the Hermitized matrix and a positivity verdict.

    is_positive iff min_eig >= -tol * |trace|.
    """
    evals = np.linalg.eigvalsh(_hermitized(rho.mat))
    tr = abs(rho.mat.trace().real)
    return {"min_eig": float(evals[0]),
            "is_positive": bool(evals[0] >= -tol * max(tr, 1e-300))}


def purity(rho: StateMatrix | np.ndarray) -> float:
    mat = rho.mat if isinstance(rho, StateMatrix) else rho
    return float(np.trace(mat @ mat).real)


def purity_rate(G, rho: StateMatrix) -> float:
    """d Tr(rho^2)/dt along the flow of G, as 2 Re Tr(rho G(rho))."""
    g = G.apply_array(rho.mat)
    return float(2.0 * np.real(np.trace(rho.mat @ g)))


def purity_rate_fd(G, rho: StateMatrix, delta: float = 1e-3,
                   substeps: int = 32) -> float:
    """Independent finite-difference oracle for the purity rate.

    Classic fixed-step RK4 propagation to +-delta and +-delta/2, central
    differences, one Richardson extrapolation. Deliberately avoids the
    superoperator-exponential code path.
    """
    rhs = G.apply_array

    def prop(mat: np.ndarray, t_target: float) -> np.ndarray:
        sign = 1.0 if t_target >= 0 else -1.0
        span = abs(t_target)
        h = span / substeps
        y = mat.copy()
        for _ in range(substeps):
            k1 = sign * rhs(y)
            k2 = sign * rhs(y + 0.5 * h * k1)
            k3 = sign * rhs(y + 0.5 * h * k2)
            k4 = sign * rhs(y + h * k3)
            y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        return y

    def P(t):
        return purity(prop(rho.mat, t))

    D1 = (P(delta) - P(-delta)) / (2 * delta)
    D2 = (P(delta / 2) - P(-delta / 2)) / delta
    return float((4 * D2 - D1) / 3)


def trace_rate_fd(G, sigma: StateMatrix, delta: float = 1e-3,
                  substeps: int = 32) -> float:
    """Finite-difference oracle for d Tr(sigma)/dt (real part)."""
    rhs = G.apply_array

    def prop(mat, t_target):
        sign = 1.0 if t_target >= 0 else -1.0
        h = abs(t_target) / substeps
        y = mat.copy()
        for _ in range(substeps):
            k1 = sign * rhs(y)
            k2 = sign * rhs(y + 0.5 * h * k1)
            k3 = sign * rhs(y + 0.5 * h * k2)
            k4 = sign * rhs(y + h * k3)
            y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        return y

    def Tr(t):
        return prop(sigma.mat, t).trace().real

    D1 = (Tr(delta) - Tr(-delta)) / (2 * delta)
    D2 = (Tr(delta / 2) - Tr(-delta / 2)) / delta
    return float((4 * D2 - D1) / 3)


def gaussian_moments(rho: StateMatrix, q: Operator, p: Operator) -> dict:
    """First and symmetrized second central moments, plus the
    Robertson-Schrodinger determinant var_q var_p - cov_qp^2."""
    ensure_same_basis(rho, q, p)
    mat = _hermitized(rho.mat)
    mq = np.trace(mat @ q.mat).real
    mp = np.trace(mat @ p.mat).real
    vq = np.trace(mat @ q.mat @ q.mat).real - mq**2
    vp = np.trace(mat @ p.mat @ p.mat).real - mp**2
    cqp = 0.5 * np.trace(mat @ (q.mat @ p.mat + p.mat @ q.mat)).real - mq * mp
    return {"mean_q": float(mq), "mean_p": float(mp), "var_q": float(vq),
            "var_p": float(vp), "cov_qp": float(cqp),
            "rs_det": float(vq * vp - cqp**2)}


# ---------------------------------------------------------------------------
# moment-matched Gaussian reference
# ---------------------------------------------------------------------------

_OMEGA_EFF_CAP = 60.0  # effective frequency cap for (near-)pure targets


def _gibbs_of_quadratic(gs: np.ndarray, mean_q: float, mean_p: float,
                        q: Operator, p: Operator) -> StateMatrix:
    """exp(-(g_qq q'^2 + g_pp p'^2 + g_qp {q',p'})/2)/Z about the means."""
    dq = q.mat - mean_q * np.eye(q.dim)
    dp = p.mat - mean_p * np.eye(q.dim)
    Hg = Operator(q.basis, 0.5 * (gs[0] * dq @ dq + gs[1] * dp @ dp
                                  + gs[2] * (dq @ dp + dp @ dq)))
    w = np.linalg.eigvalsh(_hermitized(Hg.mat))
    g = operator_function(Hg, lambda x: np.exp(-(x - w.min())))
    mat = _hermitized(g.mat)
    return StateMatrix(q.basis, mat / mat.trace().real, role="sigma")


def gaussian_reference(moments: dict, q: Operator, p: Operator,
                       params: PhysParams, match_tol: float = 1e-8,
                       max_iter: int = 30) -> StateMatrix:
    """Gaussian state on this basis with the given first/second moments.

    Solves for the quadratic Hamiltonian whose Gibbs state has the target
    covariance (closed-form seed + Newton polish on the truncated basis),
    then displaces by building the Hamiltonian in shifted variables.
    """
    hbar = params.hbar
    Sig = np.array([[moments["var_q"], moments["cov_qp"]],
                    [moments["cov_qp"], moments["var_p"]]])
    det = float(np.linalg.det(Sig))
    if det <= 0:
        raise ValueError("covariance matrix must be positive definite")
    nu = math.sqrt(det)
    x = 2.0 * nu / hbar
    if x <= 1.0 + 1e-12:
        w_eff = _OMEGA_EFF_CAP / hbar  # pure target: ground-state projector limit
    else:
        w_eff = min((1.0 / hbar) * math.log((x + 1.0) / (x - 1.0)),
                    _OMEGA_EFF_CAP / hbar)
    G2 = nu * w_eff * np.linalg.inv(Sig)
    # unknowns: quadratic coefficients plus the center of the shifted variables
    # (truncation pulls the realized means slightly off the nominal center)
    x0 = np.array([G2[0, 0], G2[1, 1], G2[0, 1],
                   moments["mean_q"], moments["mean_p"]])
    target = np.array([moments["var_q"], moments["var_p"], moments["cov_qp"],
                       moments["mean_q"], moments["mean_p"]])

    def residual(x):
        st = _gibbs_of_quadratic(x[:3], x[3], x[4], q, p)
        mm = gaussian_moments(st, q, p)
        got = np.array([mm["var_q"], mm["var_p"], mm["cov_qp"],
                        mm["mean_q"], mm["mean_p"]])
        return st, got - target

    state, r = residual(x0)
    it = 0
    while np.abs(r).max() > match_tol and it < max_iter:
        J = np.zeros((5, 5))
        for j in range(5):
            step = 1e-6 * max(abs(x0[j]), 1.0)
            xp = x0.copy()
            xp[j] += step
            _, rp = residual(xp)
            J[:, j] = (rp - r) / step
        try:
            dx = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            break
        lam = 1.0
        for _ in range(6):  # backtracking
            cand = x0 + lam * dx
            st_c, r_c = residual(cand)
            if np.abs(r_c).max() < np.abs(r).max():
                x0, r, state = cand, r_c, st_c
                break
            lam *= 0.5
        else:
            break
        it += 1
    return state


def gaussianity_defect(rho: StateMatrix, q: Operator, p: Operator,
                       params: PhysParams) -> float:
    """Trace distance to the Gaussian state with matching moments.

    Returns nan (flagged not-applicable) when the moment matrix is
    unphysical, i.e. the Robertson-Schrodinger bound fails.
    """
    mm = gaussian_moments(rho, q, p)
    if mm["rs_det"] < params.hbar**2 / 4.0 - 1e-8:
        return math.nan
    ref = gaussian_reference(mm, q, p, params)
    return trace_distance(rho, ref)


def trace_distance(rho: StateMatrix, varsigma: StateMatrix) -> float:
    """Half the trace norm of the Hermitized difference."""
    ensure_same_basis(rho, varsigma)
    evals = np.linalg.eigvalsh(_hermitized(rho.mat - varsigma.mat))
    return float(0.5 * np.abs(evals).sum())


def trace_norm(mat: np.ndarray) -> float:
    return float(np.abs(np.linalg.eigvalsh(_hermitized(mat))).sum())


def stationarity_residual(G, sigma: StateMatrix) -> float:
    """||G(sigma)||_1 / ||sigma||_1."""
    out = G.apply_array(sigma.mat)
    return trace_norm(out) / trace_norm(sigma.mat)


def diagnostics_row(t: float, state: StateMatrix, q: Operator | None = None,
                    p: Operator | None = None, d_approx: float = math.nan,
                    gauss_defect: float = math.nan) -> DiagnosticsRow:
    """Assemble the standard per-sample diagnostics."""
    mat = state.mat
    tr = complex(mat.trace())
    evals = np.linalg.eigvalsh(_hermitized(mat))
    row = DiagnosticsRow(
        t=float(t), trace=tr, purity=purity(state),
        min_eig=float(evals[0]), herm_defect=float(state.herm_defect()),
        d_approx=d_approx, gauss_defect=gauss_defect)
    if q is not None and p is not None:
        mm = gaussian_moments(state, q, p)
        row.mean_q, row.mean_p = mm["mean_q"], mm["mean_p"]
        row.var_q, row.var_p, row.cov_qp = mm["var_q"], mm["var_p"], mm["cov_qp"]
    return row
