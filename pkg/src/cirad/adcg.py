"""Continuum recovery: alternating-descent conditional gradient.

Outer loop greedily adds the atom most correlated with the residual;
inner loop alternates l1-constrained weight refits, pruning, and
gradient refinement of the atom parameters. Delay is handled in units
of 1/B and angle in units of the grid pitch so one step size serves
both coordinates.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from .config import SystemConfig
from .errors import DegenerateResidualError, ShapeError
from .illumination import ToneAssignment
from .operator import atom_gradient, atom_matrix


@dataclass(frozen=True)
class AdcgConfig:
    tau_l1: float = np.inf           # l1 budget for the weights
    K_max: int = 20
    coarse_grid_factor: int = 4
    max_linesearch: int = 20
    backtrack_ratio: float = 0.5
    descent_step: float = 0.25       # initial step, scaled coordinates
    n_refine_steps: int = 8
    inner_iters: int = 3
    conv_tol: float = 1e-7           # relative outer loss decrease
    eta_abs: float = 1e-9
    eta_rel: float = 1e-7
    prune_rel: float = 1e-6          # |x_k| <= prune_rel * max|x| drops atom

    def __post_init__(self):
        if self.K_max < 1 or self.coarse_grid_factor < 1:
            raise ShapeError("K_max and coarse_grid_factor must be >= 1")
        if min(self.conv_tol, self.eta_abs, self.eta_rel,
               self.backtrack_ratio, self.descent_step) <= 0:
            raise ShapeError("descent and convergence knobs must be positive")


@dataclass
class ContinuumEstimate:
    atoms: list                      # (delay_seconds, cos_theta, amplitude)
    residual_norm: float
    selection_history: list = field(default_factory=list)
    iterations: int = 0
    hit_cap: bool = False

    def to_json(self) -> str:
        return json.dumps({
            "atoms": [{"delay": d, "cos_theta": th, "re": a.real,
                       "im": a.imag} for d, th, a in self.atoms],
            "residual_norm": self.residual_norm,
            "iterations": self.iterations,
            "hit_cap": self.hit_cap,
        })


def _interior(config: SystemConfig, delay: float, angle: float) -> bool:
    eps_d = 1e-9 * config.unambiguous_tu
    return (eps_d < delay < config.unambiguous_tu - eps_d
            and -1.0 + 1e-9 < angle < 1.0 - 1e-9)


def _coarse_grid(config: SystemConfig, factor: int):
    n_d = factor * config.n_range_bins_N
    delays = np.arange(1, n_d) / (factor * config.bandwidth_B)
    if config.n_angle_bins == 1:
        angles = np.array([0.0])
    else:
        n_a = factor * config.n_angle_bins
        angles = -1.0 + (2.0 * np.arange(n_a) + 1.0) / n_a
    return delays, angles


def select_atom(residual: np.ndarray, config: SystemConfig,
                tones: ToneAssignment, adcg: AdcgConfig = AdcgConfig()):
    """Coarse-grid argmax of |<Psi, residual>| followed by local ascent."""
    r_norm = np.linalg.norm(residual)
    if r_norm < adcg.eta_abs:
        raise DegenerateResidualError("residual is numerically zero")

    delays, angles = _coarse_grid(config, adcg.coarse_grid_factor)
    dd, aa = np.meshgrid(delays, angles, indexing="ij")
    psi = atom_matrix(config, tones, dd.ravel(), aa.ravel())
    corr = np.abs(psi.conj().T @ residual)
    best = int(np.argmax(corr))   # ties: lowest linear index
    delay, angle = float(dd.ravel()[best]), float(aa.ravel()[best])

    siso = config.n_angle_bins == 1
    d_scale = 1.0 / config.bandwidth_B            # one range bin
    a_scale = 2.0 / config.n_angle_bins           # one angle pitch

    def score(d, th):
        return abs(np.vdot(atom_matrix(config, tones, [d], [th])[:, 0],
                           residual))

    cur = score(delay, angle)
    step = adcg.descent_step
    for _ in range(adcg.n_refine_steps):
        psi1 = atom_matrix(config, tones, [delay], [angle])[:, 0]
        ip = np.vdot(psi1, residual)
        g_d, g_a = atom_gradient(config, tones, delay, angle)
        # ascent direction of |<Psi, r>|^2, rescaled per coordinate
        grad_d = (np.vdot(g_d, residual) * np.conj(ip)).real * d_scale
        grad_a = (np.vdot(g_a, residual) * np.conj(ip)).real * a_scale
        gnorm = np.hypot(grad_d, grad_a)
        if gnorm == 0:
            break
        improved = False
        s = step
        for _ in range(adcg.max_linesearch):
            cand_d = delay + s * grad_d / gnorm * d_scale
            cand_a = angle if siso else angle + s * grad_a / gnorm * a_scale
            if _interior(config, cand_d, cand_a):
                val = score(cand_d, cand_a)
                if val > cur:
                    delay, angle, cur = cand_d, cand_a, val
                    improved = True
                    break
            s *= adcg.backtrack_ratio
        if not improved:
            step *= adcg.backtrack_ratio
            if step < 1e-6:
                break
    return delay, angle


def _project_l1_ball(x: np.ndarray, tau: float) -> np.ndarray:
    """Exact projection onto the complex l1 ball (magnitude simplex)."""
    mags = np.abs(x)
    total = mags.sum()
    if total <= tau:
        return x.copy()
    if tau == 0:
        return np.zeros_like(x)
    # project magnitudes onto the real l1 ball of radius tau
    u = np.sort(mags)[::-1]
    css = np.cumsum(u)
    rho = np.nonzero(u - (css - tau) / (np.arange(x.size) + 1) > 0)[0][-1]
    theta = (css[rho] - tau) / (rho + 1.0)
    new_mags = np.maximum(mags - theta, 0.0)
    out = np.zeros_like(x)
    nz = mags > 0
    out[nz] = x[nz] * (new_mags[nz] / mags[nz])
    return out


def refit_weights(psi_s: np.ndarray, y: np.ndarray, tau_l1: float,
                  max_iters: int = 500, tol: float = 1e-12) -> np.ndarray:
    """min ||Psi_S x - y||^2 over the complex l1 ball of radius tau."""
    if psi_s.ndim != 2 or psi_s.shape[0] != y.size:
        raise ShapeError("atom matrix incompatible with measurement")
    if tau_l1 == 0:
        return np.zeros(psi_s.shape[1], dtype=np.complex128)
    if not np.isfinite(tau_l1):
        x, *_ = np.linalg.lstsq(psi_s, y, rcond=None)
        return x

    gram = psi_s.conj().T @ psi_s
    aty = psi_s.conj().T @ y
    L = float(np.linalg.eigvalsh(gram)[-1])
    step = 1.0 / max(L, 1e-300)
    x = _project_l1_ball(np.linalg.lstsq(psi_s, y, rcond=None)[0], tau_l1)
    for _ in range(max_iters):
        x_new = _project_l1_ball(x - step * (gram @ x - aty), tau_l1)
        if np.linalg.norm(x_new - x) <= tol * max(1.0, np.linalg.norm(x)):
            return x_new
        x = x_new
    return x


def refine_support(params: list, weights: np.ndarray, y: np.ndarray,
                   config: SystemConfig, tones: ToneAssignment,
                   adcg: AdcgConfig = AdcgConfig()) -> list:
    """Backtracking gradient steps on all (delay, angle) pairs jointly.

    Never accepts a loss-increasing step; parameters stay interior to
    the domain. Returns the (possibly unchanged) parameter list.
    """
    if not params:
        return params
    siso = config.n_angle_bins == 1
    d_scale = 1.0 / config.bandwidth_B
    a_scale = 2.0 / config.n_angle_bins

    def model(prm):
        psi = atom_matrix(config, tones, [p[0] for p in prm],
                          [p[1] for p in prm])
        return psi @ weights

    def loss(prm):
        r = model(prm) - y
        return 0.5 * float(np.vdot(r, r).real)

    cur = loss(params)
    for _ in range(adcg.n_refine_steps):
        resid = model(params) - y
        grads = []
        for (d, th), w in zip(params, weights):
            g_d, g_a = atom_gradient(config, tones, d, th)
            gd = (np.vdot(resid, w * g_d)).real * d_scale
            ga = 0.0 if siso else (np.vdot(resid, w * g_a)).real * a_scale
            grads.append((gd, ga))
        gnorm = np.sqrt(sum(gd * gd + ga * ga for gd, ga in grads))
        if gnorm == 0:
            break
        s = adcg.descent_step
        accepted = False
        for _ in range(adcg.max_linesearch):
            cand = []
            ok = True
            for (d, th), (gd, ga) in zip(params, grads):
                nd = d - s * gd / gnorm * d_scale
                na = th if siso else th - s * ga / gnorm * a_scale
                if not _interior(config, nd, na):
                    ok = False
                    break
                cand.append((nd, na))
            if ok:
                val = loss(cand)
                if val < cur:
                    params, cur = cand, val
                    accepted = True
                    break
            s *= adcg.backtrack_ratio
        if not accepted:
            break
    return params


def run_adcg(y: np.ndarray, config: SystemConfig, tones: ToneAssignment,
             adcg: AdcgConfig = AdcgConfig()) -> ContinuumEstimate:
    """Full alternating-descent conditional-gradient loop."""
    y = np.asarray(y, dtype=np.complex128)
    if y.size != config.n_rx_NR * config.n_samples_M:
        raise ShapeError("measurement length inconsistent with config")

    params: list = []
    weights = np.zeros(0, dtype=np.complex128)
    history: list = []
    y_norm = float(np.linalg.norm(y))
    stop_res = max(adcg.eta_abs, adcg.eta_rel * y_norm)
    prev_loss = 0.5 * y_norm ** 2
    hit_cap = False
    outer = 0

    while True:
        if params:
            psi = atom_matrix(config, tones, [p[0] for p in params],
                              [p[1] for p in params])
            residual = y - psi @ weights
        else:
            residual = y.copy()
        if np.linalg.norm(residual) <= stop_res:
            break
        if len(params) >= adcg.K_max:
            hit_cap = True
            break
        outer += 1

        delay, angle = select_atom(residual, config, tones, adcg)
        params.append((delay, angle))
        history.append((delay, angle))

        for _ in range(adcg.inner_iters):
            psi = atom_matrix(config, tones, [p[0] for p in params],
                              [p[1] for p in params])
            weights = refit_weights(psi, y, adcg.tau_l1)
            # prune (the exact |x_k| = 0 test never fires in floats)
            keep = np.abs(weights) > adcg.prune_rel * max(
                np.abs(weights).max(), 1e-300)
            if not keep.all():
                params = [p for p, k in zip(params, keep) if k]
                weights = weights[keep]
                if not params:
                    break
            params = refine_support(params, weights, y, config, tones, adcg)

        if params:
            psi = atom_matrix(config, tones, [p[0] for p in params],
                              [p[1] for p in params])
            weights = refit_weights(psi, y, adcg.tau_l1)
            loss = 0.5 * float(np.linalg.norm(psi @ weights - y) ** 2)
        else:
            loss = 0.5 * y_norm ** 2
        if prev_loss - loss < adcg.conv_tol * max(prev_loss, 1e-300):
            prev_loss = min(loss, prev_loss)
            break
        prev_loss = loss

    if params:
        psi = atom_matrix(config, tones, [p[0] for p in params],
                          [p[1] for p in params])
        res_norm = float(np.linalg.norm(y - psi @ weights))
    else:
        res_norm = y_norm
    atoms = [(float(d), float(th), complex(w))
             for (d, th), w in zip(params, weights)]
    return ContinuumEstimate(atoms=atoms, residual_norm=res_norm,
                             selection_history=history, iterations=outer,
                             hit_cap=hit_cap)


def prune_small_atoms(estimate: ContinuumEstimate, y: np.ndarray,
                      config: SystemConfig, tones: ToneAssignment,
                      rel_threshold: float = 5e-2,
                      tau_l1: float = np.inf,
                      max_rounds: int = 40) -> ContinuumEstimate:
    """Drop atoms below rel_threshold of the largest magnitude, then
    alternate amplitude refits and parameter refinement on the survivors.

    Cleans up the tiny residual-chasing atoms the greedy loop can leave
    behind when the dominant atom positions are slightly off; the deeper
    refinement lets the survivors absorb that mass. Returns the estimate
    unchanged when nothing is pruned.
    """
    if not estimate.atoms:
        return estimate
    y = np.asarray(y, dtype=np.complex128)
    mags = np.array([abs(a) for _, _, a in estimate.atoms])
    keep = mags > rel_threshold * mags.max()
    if keep.all():
        return estimate
    params = [(d, th) for (d, th, _), k in zip(estimate.atoms, keep) if k]
    adcg = AdcgConfig(tau_l1=tau_l1)
    prev = np.inf
    for _ in range(max_rounds):
        psi = atom_matrix(config, tones, [p[0] for p in params],
                          [p[1] for p in params])
        weights = refit_weights(psi, y, tau_l1)
        params = refine_support(params, weights, y, config, tones, adcg)
        loss = float(np.linalg.norm(
            atom_matrix(config, tones, [p[0] for p in params],
                        [p[1] for p in params]) @ weights - y))
        if prev - loss < adcg.conv_tol * max(prev, 1e-300):
            break
        prev = loss
    psi = atom_matrix(config, tones, [p[0] for p in params],
                      [p[1] for p in params])
    weights = refit_weights(psi, y, tau_l1)
    atoms = [(float(d), float(th), complex(w))
             for (d, th), w in zip(params, weights)]
    res_norm = float(np.linalg.norm(y - psi @ weights))
    return ContinuumEstimate(atoms=atoms, residual_norm=res_norm,
                             selection_history=estimate.selection_history,
                             iterations=estimate.iterations,
                             hit_cap=estimate.hit_cap)


class AdcgRecovery(BaseEstimator):
    """Estimator wrapper: fit(y) runs ADCG for the bound (config, tones)."""

    def __init__(self, config=None, tones=None, tau_l1=np.inf, K_max=20,
                 coarse_grid_factor=4, conv_tol=1e-7):
        self.config = config
        self.tones = tones
        self.tau_l1 = tau_l1
        self.K_max = K_max
        self.coarse_grid_factor = coarse_grid_factor
        self.conv_tol = conv_tol

    def fit(self, y):
        cfg = AdcgConfig(tau_l1=self.tau_l1, K_max=self.K_max,
                         coarse_grid_factor=self.coarse_grid_factor,
                         conv_tol=self.conv_tol)
        est = run_adcg(np.asarray(y), self.config, self.tones, cfg)
        self.estimate_ = est
        self.atoms_ = est.atoms
        self.residual_norm_ = est.residual_norm
        return self
