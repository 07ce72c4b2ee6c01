"""Gaussian process regression with RBF and dot-product kernels.

Targets are centered to a zero-mean prior; the training mean is restored
at prediction time.  Hyperparameters maximize the log marginal likelihood
by multi-start Nelder-Mead over log-parameters, and the fitted model
caches a Cholesky factor so prediction never inverts a matrix explicitly.
The expected-improvement merit of a prediction is the standard closed
form E[max(Y - fMax - xi, 0)] for Y ~ N(mean, stddev^2).
"""

import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Optional, Tuple

import numpy as np
from scipy.linalg import cho_solve, cholesky, eigh, solve_triangular
from scipy.optimize import minimize

RBF = "rbf"
DOT_PRODUCT = "dot"

_LOG_2PI = math.log(2.0 * math.pi)
_SQRT_2PI = math.sqrt(2.0 * math.pi)

# relative sigma_n^2 box, in units of target variance (used when the spec
# leaves noise bounds unset)
_REL_NOISE_BOUNDS = (1e-8, 1e-1)


class GpFitError(RuntimeError):
    """Cholesky failure even after the full jitter ladder."""


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family, hyperparameter values, and their fitting bounds.

    Bounds are (lo, hi) boxes in natural units; a parameter with lo == hi
    is held fixed at that value during fitting.  ``noise_variance_bounds``
    of None means the box [1e-8, 1e-1] scaled by the target variance,
    resolved when fit() sees the data.
    """

    family: str = DOT_PRODUCT
    signal_variance: float = 1.0
    length_scale: float = 1.0  # RBF only
    offset: float = 1.0  # dot-product only
    noise_variance: float = 1e-4
    signal_variance_bounds: Tuple[float, float] = (1e-6, 1e6)
    length_scale_bounds: Tuple[float, float] = (1e-3, 1e3)
    offset_bounds: Tuple[float, float] = (1e-6, 1e6)
    noise_variance_bounds: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        if self.family not in (RBF, DOT_PRODUCT):
            raise ValueError("unknown kernel family %r" % (self.family,))


class Prediction(NamedTuple):
    mean: float
    stddev: float


def kernel_eval(spec: KernelSpec, x, xp) -> float:
    """Kernel value k(x, x') for a single pair of vectors."""
    x = np.asarray(x, dtype=float).ravel()
    xp = np.asarray(xp, dtype=float).ravel()
    if x.shape != xp.shape:
        raise ValueError("dimension mismatch: %d vs %d" % (x.size, xp.size))
    if spec.family == RBF:
        d2 = float(np.sum((x - xp) ** 2))
        return spec.signal_variance * math.exp(-d2 / (2.0 * spec.length_scale**2))
    return spec.signal_variance * (spec.offset + float(x @ xp))


def _kernel_matrix(spec: KernelSpec, X: np.ndarray) -> np.ndarray:
    if spec.family == RBF:
        sq = np.sum(X * X, axis=1)
        d2 = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
        np.maximum(d2, 0.0, out=d2)
        return spec.signal_variance * np.exp(-d2 / (2.0 * spec.length_scale**2))
    return spec.signal_variance * (spec.offset + X @ X.T)


def _kernel_cross(spec: KernelSpec, X: np.ndarray, x: np.ndarray) -> np.ndarray:
    if spec.family == RBF:
        d2 = np.sum((X - x[None, :]) ** 2, axis=1)
        return spec.signal_variance * np.exp(-d2 / (2.0 * spec.length_scale**2))
    return spec.signal_variance * (spec.offset + X @ x)


def _chol_jitter(K: np.ndarray, trace_per_n: float):
    """Lower Cholesky factor of K, escalating diagonal jitter on failure.

    The ladder starts at 1e-10 * trace_per_n and multiplies by 10 up to
    1e-4 * trace_per_n; returns (L, jitter) or raises GpFitError.
    """
    if trace_per_n <= 0.0:
        trace_per_n = 1.0
    try:
        return cholesky(K, lower=True), 0.0
    except np.linalg.LinAlgError:
        pass
    jitter = 1e-10 * trace_per_n
    cap = 1e-4 * trace_per_n
    eye = np.eye(K.shape[0])
    while jitter <= cap * (1.0 + 1e-12):
        try:
            return cholesky(K + jitter * eye, lower=True), jitter
        except np.linalg.LinAlgError:
            jitter *= 10.0
    raise GpFitError(
        "Cholesky failed after max jitter %.3g (degenerate training data)" % cap
    )


class GpModel:
    """A fitted GP: kernel spec, centered training data, cached Cholesky."""

    def __init__(self, spec, X, y_centered, target_mean, L, alpha, jitter, fit_info):
        self.spec = spec
        self.X = X
        self.y_centered = y_centered
        self.target_mean = target_mean
        self.L = L
        self.alpha = alpha
        self.jitter = jitter
        self.fit_info = fit_info
        # row norms serve the sparse-query fast path for RBF distances
        self._row_sq = np.sum(X * X, axis=1)

    @property
    def n_train(self) -> int:
        return self.X.shape[0]

    def predict_sparse(self, indices, values) -> Prediction:
        """Posterior at a query given only its nonzero descriptor entries.

        ``values`` must already carry any descriptor scaling applied to
        the training inputs.  Equivalent to predict() on the dense vector
        with those entries; dimension checks are skipped for speed.
        """
        spec = self.spec
        vals = np.asarray(values, dtype=float)
        dots = self.X[:, indices] @ vals
        sq = float(vals @ vals)
        if spec.family == RBF:
            d2 = np.maximum(self._row_sq + sq - 2.0 * dots, 0.0)
            k_star = spec.signal_variance * np.exp(
                -d2 / (2.0 * spec.length_scale**2)
            )
            kxx = spec.signal_variance
        else:
            k_star = spec.signal_variance * (spec.offset + dots)
            kxx = spec.signal_variance * (spec.offset + sq)
        return self._finish(k_star, kxx)

    def _finish(self, k_star, kxx) -> Prediction:
        v = solve_triangular(self.L, k_star, lower=True, check_finite=False)
        var = kxx - float(v @ v)
        mean = float(k_star @ self.alpha) + self.target_mean
        return Prediction(mean, math.sqrt(max(var, 0.0)))


def predict(m: GpModel, x) -> Prediction:
    """Posterior mean and stddev at x, via the cached Cholesky factor."""
    x = np.asarray(x, dtype=float).ravel()
    if x.size != m.X.shape[1]:
        raise ValueError(
            "dimension mismatch: query %d vs training %d" % (x.size, m.X.shape[1])
        )
    k_star = _kernel_cross(m.spec, m.X, x)
    kxx = kernel_eval(m.spec, x, x)
    return m._finish(k_star, kxx)


def expected_improvement(p: Prediction, f_max: float, xi: float) -> float:
    """E[max(Y - f_max - xi, 0)] for Y ~ N(p.mean, p.stddev^2); >= 0."""
    if xi < 0.0:
        raise ValueError("xi must be nonnegative")
    delta = p.mean - f_max - xi
    if p.stddev <= 0.0:
        return max(delta, 0.0)
    z = delta / p.stddev
    pdf = math.exp(-0.5 * z * z) / _SQRT_2PI
    cdf = 0.5 * math.erfc(-z / math.sqrt(2.0))
    return max(delta * cdf + p.stddev * pdf, 0.0)


# ---------------------------------------------------------------------------
# Fitting
# ---------------------------------------------------------------------------

# free-parameter layout per family (name order fixes the theta layout)
_PARAM_NAMES = {RBF: ("signal_variance", "length_scale", "noise_variance"),
                DOT_PRODUCT: ("signal_variance", "offset", "noise_variance")}


def _resolve_bounds(spec: KernelSpec, var_y: float):
    scale = var_y if var_y > 0.0 else 1.0
    nb = spec.noise_variance_bounds
    if nb is None:
        nb = (_REL_NOISE_BOUNDS[0] * scale, _REL_NOISE_BOUNDS[1] * scale)
    return {"signal_variance": spec.signal_variance_bounds,
            "length_scale": spec.length_scale_bounds,
            "offset": spec.offset_bounds,
            "noise_variance": nb}


class _DotLml:
    """O(n) log-marginal-likelihood for the dot-product kernel.

    K_n = sv*(G + off*1*1') + nv*I with G = X X' eigendecomposed once;
    the rank-one offset term enters through Sherman-Morrison and the
    matching determinant lemma.  Requires nv > 0.
    """

    def __init__(self, X, yc, gram=None):
        G = X @ X.T if gram is None else gram
        lam, Q = eigh(G)
        self.lam = np.maximum(lam, 0.0)
        self.yt = Q.T @ yc
        self.ut = Q.T @ np.ones(len(yc))
        self.n = len(yc)

    def __call__(self, sv, off, nv):
        d = sv * self.lam + nv
        if d.min() <= 0.0:
            return -math.inf
        inv_d = 1.0 / d
        y_ainv_y = float(self.yt @ (inv_d * self.yt))
        u_ainv_y = float(self.ut @ (inv_d * self.yt))
        u_ainv_u = float(self.ut @ (inv_d * self.ut))
        c = sv * off
        denom = 1.0 + c * u_ainv_u
        if denom <= 0.0:
            return -math.inf
        quad = y_ainv_y - c * u_ainv_y * u_ainv_y / denom
        logdet = float(np.sum(np.log(d))) + math.log(denom)
        return -0.5 * quad - 0.5 * logdet - 0.5 * self.n * _LOG_2PI


def _make_kernel_fn(spec, X, gram=None):
    """values -> K(X, X) with the expensive pairwise structure hoisted out."""
    if spec.family == RBF:
        sq = np.sum(X * X, axis=1)
        d2 = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
        np.maximum(d2, 0.0, out=d2)

        def k_of(values):
            return values["signal_variance"] * np.exp(
                -d2 / (2.0 * values["length_scale"] ** 2))
    else:
        G = X @ X.T if gram is None else gram

        def k_of(values):
            return values["signal_variance"] * (values["offset"] + G)
    return k_of


def _generic_lml(k_of, yc, values):
    K = k_of(values)
    n = len(yc)
    trace_per_n = float(np.trace(K)) / n
    Kn = K + values["noise_variance"] * np.eye(n)
    try:
        L, _ = _chol_jitter(Kn, trace_per_n)
    except GpFitError:
        return -math.inf
    alpha = cho_solve((L, True), yc, check_finite=False)
    lml = (-0.5 * float(yc @ alpha)
           - float(np.sum(np.log(np.diag(L))))
           - 0.5 * n * _LOG_2PI)
    return lml if math.isfinite(lml) else -math.inf


def fit(X, y, spec: KernelSpec, rng=None, gram=None, optimize=True) -> GpModel:
    """Fit hyperparameters by multi-start LML maximization.

    Five starts: the spec's own values plus four log-uniform draws within
    bounds, each refined by Nelder-Mead over log-parameters for at most
    200 iterations.  Parameters whose bounds collapse to a point are held
    fixed.  The returned model's fit_info records the per-start initial
    and final LML values.

    ``gram`` optionally supplies a precomputed X @ X.T (dot-product
    family only), sparing the quadratic rebuild when the caller grows
    its training set incrementally.  ``optimize=False`` skips the search
    and conditions on the spec's hyperparameters exactly as given.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y, dtype=float).ravel()
    n = X.shape[0]
    if n < 1:
        raise ValueError("need at least one training point")
    if len(y) != n:
        raise ValueError("X and y length mismatch")
    target_mean = float(np.mean(y))
    yc = y - target_mean
    bounds = _resolve_bounds(spec, float(np.var(y)))

    names = _PARAM_NAMES[spec.family]
    fixed = {}
    free = []
    if not optimize:
        fixed = {name: getattr(spec, name) for name in names}
        bounds = {name: (fixed[name], fixed[name]) for name in names}
    else:
        for name in names:
            lo, hi = bounds[name]
            if not 0.0 <= lo <= hi:
                raise ValueError("bad bounds for %s: (%g, %g)" % (name, lo, hi))
            init = min(max(getattr(spec, name), lo), hi)
            if lo == hi:
                fixed[name] = lo
            else:
                if lo <= 0.0:
                    raise ValueError("free parameter %s needs a positive lower bound" % name)
                free.append((name, math.log(init), math.log(lo), math.log(hi)))

    k_of = _make_kernel_fn(spec, X, gram)
    # O(n) dot-product path needs strictly positive noise; a noise level
    # pinned at zero falls back to per-evaluation Cholesky with jitter
    dot_fast = None
    if spec.family == DOT_PRODUCT and fixed.get("noise_variance", 1.0) > 0.0:
        dot_fast = _DotLml(X, yc, gram)

    def lml_of(values):
        if dot_fast is not None:
            return dot_fast(values["signal_variance"], values["offset"],
                            values["noise_variance"])
        return _generic_lml(k_of, yc, values)

    def theta_values(theta):
        values = dict(fixed)
        for (name, _, _, _), t in zip(free, theta):
            values[name] = math.exp(t)
        return values

    start_lmls = []
    final_lmls = []
    best_values = dict(fixed)
    best_lml = -math.inf
    if free:
        rng = np.random.default_rng(0 if rng is None else rng)
        starts = [np.array([t0 for _, t0, _, _ in free])]
        for _ in range(4):
            starts.append(np.array([rng.uniform(lo, hi) for _, _, lo, hi in free]))
        log_bounds = [(lo, hi) for _, _, lo, hi in free]

        def objective(theta):
            return -lml_of(theta_values(theta))

        for theta0 in starts:
            lml0 = lml_of(theta_values(theta0))
            start_lmls.append(lml0)
            res = minimize(objective, theta0, method="Nelder-Mead",
                           bounds=log_bounds, options={"maxiter": 200})
            lml_final = -res.fun
            final_lmls.append(lml_final)
            if lml_final > best_lml:
                best_lml = lml_final
                best_values = theta_values(res.x)
        if not math.isfinite(best_lml):
            # every start failed its Cholesky; keep the clipped initial
            # values and let the final factorization raise if it must
            best_values = theta_values(starts[0])
    else:
        best_lml = lml_of(dict(fixed))
        start_lmls.append(best_lml)
        final_lmls.append(best_lml)

    fitted = replace(spec, **best_values)
    K = k_of({name: getattr(fitted, name) for name in names})
    trace_per_n = float(np.trace(K)) / n
    Kn = K + fitted.noise_variance * np.eye(n)
    L, jitter = _chol_jitter(Kn, trace_per_n)
    alpha = cho_solve((L, True), yc, check_finite=False)
    fit_info = {"lml": best_lml,
                "start_lmls": start_lmls,
                "final_lmls": final_lmls,
                "noise_bounds": bounds["noise_variance"]}
    return GpModel(fitted, X, yc, target_mean, L, alpha, jitter, fit_info)
