"""
MLE log-côncavo bivariado (funções tenda) e suavização com matriz de banda

O MLE minimiza o objectivo convexo
    σ(y) = -Σ w_i y_i + ∫ exp(ȳ)
onde ȳ é o menor majorante côncavo dos pares (x_i, y_i), afim sobre os
triângulos do invólucro superior dos pontos levantados.
"""

import logging
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import minimize
from scipy.spatial import ConvexHull

from models.constants import ModelConstants, validate_finite
from models.tent_density import SmoothedTent2D, TentDensity2D
from models.weighted_sample import WeightedSample2D
from utils.exceptions import DegenerateSupportError, InvalidInputError, NonConvergenceError
from utils.numerics import triangle_exp_integrals, triangle_exp_second_moments

logger = logging.getLogger(__name__)

_LBFGS_RESTARTS = 5
_POLISH_ROUNDS = 30
_SUBGRADIENT_STEP = 0.5
_POINT_CHUNK = 512


class BandwidthMatrixChoice:
    """Matriz de banda escolhida e indicação de valores próprios cortados"""

    def __init__(self, matrix: np.ndarray, clipped: bool):
        self.matrix = np.asarray(matrix, dtype=float)
        self.clipped = bool(clipped)

    def to_dict(self):
        return {'bandwidth_matrix': self.matrix.tolist(), 'clipped': self.clipped}

    def __repr__(self) -> str:
        return f"BandwidthMatrixChoice(matrix={self.matrix.tolist()}, clipped={self.clipped})"


def _triangle_areas(points: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    corners = points[triangles]
    e1 = corners[:, 1] - corners[:, 0]
    e2 = corners[:, 2] - corners[:, 0]
    return 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])


def upper_triangles(points: np.ndarray, values: np.ndarray) -> np.ndarray:
    """
    Triângulos do invólucro superior de {(x_i, y_i)}

    Junta-se uma cópia dos pontos abaixo de min(y) para o invólucro 3-D ser
    não degenerado; ficam as facetas com normal exterior a apontar para cima.

    Returns:
        np.ndarray: Índices (T, 3) nos pontos originais
    """
    n = points.shape[0]
    floor = float(values.min()) - 1.0
    lifted = np.vstack([
        np.column_stack([points, values]),
        np.column_stack([points, np.full(n, floor)]),
    ])
    try:
        hull = ConvexHull(lifted)
    except Exception as e:
        raise DegenerateSupportError(f"convex hull failed: {e}") from e
    upper = hull.equations[:, 2] > 1e-12
    simplices = hull.simplices[upper]
    simplices = simplices[np.all(simplices < n, axis=1)]
    areas = _triangle_areas(points, simplices)
    extent = np.ptp(points, axis=0)
    keep = areas > 1e-14 * max(float(extent[0] * extent[1]), 1e-300)
    return simplices[keep]


def _planes(points: np.ndarray, values: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    corners = points[triangles]
    system = np.concatenate([corners, np.ones((triangles.shape[0], 3, 1))], axis=2)
    return np.linalg.solve(system, values[triangles][..., None])[..., 0]


def _tent_values(points: np.ndarray, values: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    planes = _planes(points, values, triangles)
    out = np.empty(points.shape[0])
    for start in range(0, points.shape[0], _POINT_CHUNK):
        chunk = points[start:start + _POINT_CHUNK]
        out[start:start + _POINT_CHUNK] = (chunk @ planes[:, :2].T + planes[:, 2]).min(axis=1)
    return out


def concave_envelope(points, values) -> Tuple[np.ndarray, np.ndarray]:
    """
    Menor função côncava que majora os valores dados

    Args:
        points: Pontos (n, 2) que geram o plano
        values: Valores y_i (n,)

    Returns:
        (envelope_values, triangles): ȳ_i em cada ponto e a triangulação
    """
    x = validate_finite(points, "points")
    y = validate_finite(values, "values").ravel()
    triangles = upper_triangles(x, y)
    envelope = np.maximum(_tent_values(x, y, triangles), y)
    return envelope, triangles


class _EnvelopeObjective:
    """σ(y) e um subgradiente; guarda o melhor ponto avaliado"""

    def __init__(self, points: np.ndarray, weights: np.ndarray):
        self.points = points
        self.weights = weights
        self.evaluations = 0
        self.best_value = np.inf
        self.best_y: Optional[np.ndarray] = None
        self.last_y: Optional[np.ndarray] = None
        self.last_value = np.inf

    def __call__(self, y: np.ndarray) -> Tuple[float, np.ndarray]:
        self.evaluations += 1
        triangles = upper_triangles(self.points, y)
        areas = _triangle_areas(self.points, triangles)
        with np.errstate(over='ignore', invalid='ignore'):
            mass, vertex_weights = triangle_exp_integrals(areas, y[triangles])
        total = float(mass.sum())
        if not np.isfinite(total):
            return 1e300, np.ones_like(y)
        value = total - float(np.dot(self.weights, y))
        grad = np.bincount(triangles.ravel(), weights=vertex_weights.ravel(),
                           minlength=y.size) - self.weights
        self.last_y, self.last_value = y.copy(), value
        if value < self.best_value:
            self.best_value, self.best_y = value, y.copy()
        return value, grad

    def value_at(self, y: np.ndarray) -> float:
        if self.last_y is not None and np.array_equal(y, self.last_y):
            return self.last_value
        return self(y)[0]


class _TentSolver:
    """L-BFGS com reinícios, fase de subgradiente e polimento de Newton"""

    def __init__(self, sample: WeightedSample2D, tol: float, max_iter: int,
                 initial_log_values: Optional[np.ndarray] = None):
        self.x = sample.points
        self.w = sample.weights
        self.tol = tol
        self.max_iter = max_iter
        self.objective = _EnvelopeObjective(self.x, self.w)
        self.history = []
        self.iterations = 0
        self.y0 = self._start(sample, initial_log_values)

    def _start(self, sample: WeightedSample2D, initial: Optional[np.ndarray]) -> np.ndarray:
        if initial is not None:
            initial = np.asarray(initial, dtype=float)
            if initial.shape == (self.x.shape[0],) and np.all(np.isfinite(initial)):
                return initial.copy()
        # log-densidade gaussiana com os momentos ponderados (todos os pontos extremos)
        mean = sample.mean()
        cov = sample.second_central_moment()
        cov = cov + 1e-9 * np.trace(cov) * np.eye(2)
        diff = self.x - mean
        quad = np.einsum('ni,ij,nj->n', diff, np.linalg.inv(cov), diff)
        return -0.5 * quad - np.log(2.0 * np.pi) - 0.5 * np.log(np.linalg.det(cov))

    def _window_converged(self) -> bool:
        window = ModelConstants.TENT_WINDOW
        if len(self.history) <= window:
            return False
        return self.history[-window - 1] - self.history[-1] < self.tol

    def _record(self, value: float):
        self.iterations += 1
        best = min(value, self.history[-1]) if self.history else value
        self.history.append(best)

    def _lbfgs(self, start: np.ndarray):
        def callback(xk):
            self._record(self.objective.value_at(xk))
            if self._window_converged() or self.iterations >= self.max_iter:
                raise StopIteration

        remaining = self.max_iter - self.iterations
        if remaining <= 0:
            return
        try:
            minimize(self.objective, start, jac=True, method='L-BFGS-B', callback=callback,
                     options={'maxiter': remaining, 'maxcor': 30,
                              'ftol': 1e-3 * self.tol, 'gtol': 1e-12})
        except StopIteration:
            pass

    def _subgradient(self):
        y = self.objective.best_y.copy()
        k = 0
        while self.iterations < self.max_iter and not self._window_converged():
            k += 1
            value, grad = self.objective(y)
            norm = np.linalg.norm(grad)
            if norm == 0:
                self._record(value)
                break
            y = y - (_SUBGRADIENT_STEP / np.sqrt(k)) * grad / norm
            self._record(self.objective.value_at(y))

    def solve(self) -> TentDensity2D:
        self.objective(self.y0)
        self._lbfgs(self.y0)
        restarts = 0
        while not self._window_converged() and restarts < _LBFGS_RESTARTS \
                and self.iterations < self.max_iter:
            restarts += 1
            before = self.objective.best_value
            self._lbfgs(self.objective.best_y)
            if before - self.objective.best_value < self.tol:
                break
        if not self._window_converged():
            self._subgradient()

        converged = self._window_converged() or (
            self.iterations < self.max_iter and len(self.history) > 0)
        polished = _NewtonPolish(self.x, self.w, self.objective).run(self.objective.best_y)
        tent = _build_tent(self.x, polished)
        if not converged:
            raise NonConvergenceError(
                f"Tent solver did not converge within {self.max_iter} iterations",
                best=tent, iterations=self.iterations,
            )
        logger.debug(f"Tent MLE: {self.iterations} iterations, "
                     f"{self.objective.evaluations} evaluations, objective {self.objective.best_value:.10f}")
        return tent


class _NewtonPolish:
    """
    Newton com a triangulação fixa

    Com a estrutura de vértices certa o objectivo é suave; vértices que
    ficam abaixo do envelope saem e repete-se. O resultado só é usado se
    baixar σ.
    """

    def __init__(self, points: np.ndarray, weights: np.ndarray, objective: _EnvelopeObjective):
        self.x = points
        self.w = weights
        self.objective = objective

    def _locate(self, triangles: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Triângulo e coordenadas baricêntricas de cada ponto"""
        corners = self.x[triangles]
        e1 = corners[:, 1] - corners[:, 0]
        e2 = corners[:, 2] - corners[:, 0]
        inv = np.linalg.inv(np.stack([e1, e2], axis=2))
        owner = np.zeros(self.x.shape[0], dtype=np.int64)
        bary = np.zeros((self.x.shape[0], 3))
        for start in range(0, self.x.shape[0], _POINT_CHUNK):
            pts = self.x[start:start + _POINT_CHUNK]
            rel = pts[:, None, :] - corners[None, :, 0, :]
            st = np.einsum('tij,ntj->nti', inv, rel)
            lam = np.concatenate([1.0 - st.sum(axis=2, keepdims=True), st], axis=2)
            best = np.argmax(lam.min(axis=2), axis=1)
            owner[start:start + _POINT_CHUNK] = best
            bary[start:start + _POINT_CHUNK] = lam[np.arange(pts.shape[0]), best]
        return owner, np.clip(bary, 0.0, 1.0)

    def _newton(self, triangles: np.ndarray, y: np.ndarray) -> np.ndarray:
        owner, bary = self._locate(triangles)
        n = self.x.shape[0]
        c = np.bincount(triangles[owner].ravel(), weights=(self.w[:, None] * bary).ravel(),
                        minlength=n)
        areas = _triangle_areas(self.x, triangles)
        used = np.unique(triangles)
        index = -np.ones(n, dtype=np.int64)
        index[used] = np.arange(used.size)
        local = index[triangles]
        v = y[used].copy()

        def value_of(vals):
            with np.errstate(over='ignore', invalid='ignore'):
                mass, _ = triangle_exp_integrals(areas, vals[local])
            return float(mass.sum() - np.dot(c[used], vals))

        current = value_of(v)
        for _ in range(50):
            mass, vertex_weights = triangle_exp_integrals(areas, v[local])
            grad = np.bincount(local.ravel(), weights=vertex_weights.ravel(),
                               minlength=used.size) - c[used]
            if np.max(np.abs(grad)) < 1e-14:
                break
            moments = triangle_exp_second_moments(areas, v[local])
            hess = np.zeros((used.size, used.size))
            np.add.at(hess, (local[:, :, None], local[:, None, :]), moments)
            try:
                step = -np.linalg.solve(hess, grad)
            except np.linalg.LinAlgError:
                break
            slope = float(np.dot(grad, step))
            scale = 1.0
            while scale > 1e-10:
                candidate = v + scale * step
                cand_value = value_of(candidate)
                if np.isfinite(cand_value) and cand_value <= current + 1e-4 * scale * slope:
                    break
                scale *= 0.5
            else:
                break
            v, current = candidate, cand_value

        full = y.copy()
        full[used] = v
        corner_values = full[triangles[owner]]
        return np.einsum('ni,ni->n', bary, corner_values)

    def run(self, y: np.ndarray) -> np.ndarray:
        best_y = y.copy()
        best_value = self.objective.value_at(best_y)
        current, triangles = concave_envelope(self.x, y)
        for _ in range(_POLISH_ROUNDS):
            try:
                candidate = self._newton(triangles, current)
            except (np.linalg.LinAlgError, ValueError):
                break
            envelope, new_triangles = concave_envelope(self.x, candidate)
            scale = 1e-10 * max(1.0, float(np.abs(candidate).max()))
            concave = float(np.max(envelope - candidate)) <= scale
            if concave:
                value = self.objective(candidate)[0]
                if value < best_value:
                    best_y, best_value = candidate, value
                same = {tuple(sorted(t)) for t in triangles} == {tuple(sorted(t)) for t in new_triangles}
                if same:
                    break
            current, triangles = envelope, new_triangles
        return best_y


def _build_tent(points: np.ndarray, y: np.ndarray) -> TentDensity2D:
    envelope, triangles = concave_envelope(points, y)
    used = np.unique(triangles)
    index = -np.ones(points.shape[0], dtype=np.int64)
    index[used] = np.arange(used.size)
    tent = TentDensity2D(points[used], envelope[used], index[triangles])
    shift = np.log(tent.integral())
    return TentDensity2D(points[used], envelope[used] - shift, index[triangles])


def logconcave_mle_2d(sample: WeightedSample2D, tol: float = ModelConstants.TENT_TOL,
                      max_iter: int = ModelConstants.TENT_MAX_ITER,
                      initial_log_values: Optional[np.ndarray] = None) -> TentDensity2D:
    """
    MLE log-côncavo bivariado ponderado

    Args:
        sample: Amostra ponderada com pelo menos 3 pontos não colineares
        tol: Tolerância na variação do objectivo nos últimos 10 passos
        max_iter: Limite de iterações
        initial_log_values: Ponto de partida opcional (um valor por ponto da amostra)

    Raises:
        NonConvergenceError: Limite atingido (com .best)
    """
    if not (np.isfinite(tol) and tol > 0):
        raise InvalidInputError(f"tol must be positive, got {tol}")
    return _TentSolver(sample, float(tol), int(max_iter), initial_log_values).solve()


def covariance_of(f: TentDensity2D) -> np.ndarray:
    return f.covariance()


def choose_bandwidth_2d(sample_cov, mle_cov) -> BandwidthMatrixChoice:
    """Projecção PSD de (sample_cov - mle_cov)"""
    s = validate_finite(sample_cov, "sample_cov")
    m = validate_finite(mle_cov, "mle_cov")
    for name, mat in (("sample_cov", s), ("mle_cov", m)):
        if mat.shape != (2, 2):
            raise InvalidInputError(f"{name} must be 2x2, got {mat.shape}")
        if abs(mat[0, 1] - mat[1, 0]) > 1e-12 * max(1.0, float(np.abs(mat).max())):
            raise InvalidInputError(f"{name} must be symmetric")
    diff = s - m
    diff = 0.5 * (diff + diff.T)
    eigvals, eigvecs = np.linalg.eigh(diff)
    clipped = bool(np.any(eigvals < 0))
    matrix = (eigvecs * np.maximum(eigvals, 0.0)) @ eigvecs.T
    return BandwidthMatrixChoice(0.5 * (matrix + matrix.T), clipped)


def select_bandwidth_2d(sample_cov, mle_cov) -> np.ndarray:
    return choose_bandwidth_2d(sample_cov, mle_cov).matrix


def smooth_2d(f: TentDensity2D, bandwidth_matrix) -> SmoothedTent2D:
    return SmoothedTent2D(f, bandwidth_matrix)


def smoothed_pdf_2d(g: SmoothedTent2D, t):
    values = g.pdf(t)
    return float(values) if np.ndim(values) == 0 else values


def fit_smoothed_2d(sample: WeightedSample2D, tol: float = ModelConstants.TENT_TOL,
                    smoothing: bool = True,
                    initial_log_values: Optional[np.ndarray] = None
                    ) -> Tuple[SmoothedTent2D, Optional[BandwidthMatrixChoice]]:
    """MLE bivariado + matriz de banda por igualação de covariâncias"""
    try:
        base = logconcave_mle_2d(sample, tol, initial_log_values=initial_log_values)
    except NonConvergenceError as e:
        logger.warning(f"{e}; using best iterate")
        base = e.best
    if not smoothing:
        return SmoothedTent2D(base, np.zeros((2, 2))), None
    choice = choose_bandwidth_2d(sample.sample_covariance(), base.covariance())
    if choice.clipped:
        logger.info("Bandwidth matrix had negative eigenvalues; clipped to 0")
    return SmoothedTent2D(base, choice.matrix), choice
