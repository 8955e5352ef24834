"""
Densidades log-côncavas bivariadas (funções tenda)
"""

from typing import Dict

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.spatial import ConvexHull
from scipy.special import logsumexp

from utils.exceptions import DegenerateSupportError, InvalidInputError
from utils.numerics import log_ndtr_diff, triangle_exp_integrals, triangle_exp_second_moments
from .constants import ModelConstants, validate_finite

_MAX_BLOCK = 1_000_000


class TentDensity2D:
    """
    Log-densidade côncava e afim por triângulos sobre o invólucro convexo

    Attributes:
        vertices: Vértices da triangulação, shape (n, 2)
        log_values: Log-densidade nos vértices, shape (n,)
        triangles: Índices dos vértices de cada triângulo, shape (T, 3)
    """

    def __init__(self, vertices, log_values, triangles):
        v = validate_finite(vertices, "vertices")
        y = validate_finite(log_values, "log_values").ravel()
        tri = np.asarray(triangles, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 2:
            raise InvalidInputError(f"vertices must have shape (n, 2), got {v.shape}")
        if y.size != v.shape[0]:
            raise InvalidInputError("one log value per vertex is required")
        if tri.ndim != 2 or tri.shape[1] != 3 or tri.shape[0] == 0:
            raise DegenerateSupportError("the triangulation is empty")
        if tri.min() < 0 or tri.max() >= v.shape[0]:
            raise InvalidInputError("triangle index out of range")

        self._vertices = v
        self._log_values = y
        self._triangles = tri

        corners = v[tri]
        edge1 = corners[:, 1] - corners[:, 0]
        edge2 = corners[:, 2] - corners[:, 0]
        self._areas = 0.5 * np.abs(edge1[:, 0] * edge2[:, 1] - edge1[:, 1] * edge2[:, 0])
        if np.any(self._areas <= 0):
            raise DegenerateSupportError("triangulation contains a degenerate triangle")

        system = np.concatenate([corners, np.ones((tri.shape[0], 3, 1))], axis=2)
        self._planes = np.linalg.solve(system, y[tri][..., None])[..., 0]

        try:
            self._hull = ConvexHull(v)
        except Exception as e:
            raise DegenerateSupportError(f"vertices do not span the plane: {e}") from e
        self._hull_tol = 1e-10 * max(1.0, float(np.abs(v).max()))

        for arr in (self._vertices, self._log_values, self._triangles, self._areas, self._planes):
            arr.setflags(write=False)

    @property
    def vertices(self) -> np.ndarray:
        return self._vertices

    @property
    def log_values(self) -> np.ndarray:
        return self._log_values

    @property
    def triangles(self) -> np.ndarray:
        return self._triangles

    @property
    def areas(self) -> np.ndarray:
        return self._areas

    @property
    def planes(self) -> np.ndarray:
        """Coeficientes (b1, b2, c) do plano de cada triângulo"""
        return self._planes

    @property
    def dimension(self) -> int:
        return 2

    def contains(self, x) -> np.ndarray:
        """Pertença ao invólucro convexo (fronteira incluída)"""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        eq = self._hull.equations
        return np.all(x @ eq[:, :2].T + eq[:, 2] <= self._hull_tol, axis=1)

    def log_pdf(self, x) -> np.ndarray:
        x = validate_finite(x, "x")
        single = x.ndim == 1
        pts = np.atleast_2d(x)
        out = np.empty(pts.shape[0])
        step = max(1, _MAX_BLOCK // self._planes.shape[0])
        for start in range(0, pts.shape[0], step):
            chunk = pts[start:start + step]
            values = chunk @ self._planes[:, :2].T + self._planes[:, 2]
            out[start:start + step] = values.min(axis=1)
        out = np.where(self.contains(pts), out, -np.inf)
        return out[0] if single else out

    def pdf(self, x) -> np.ndarray:
        return np.exp(self.log_pdf(x))

    def triangle_masses(self) -> np.ndarray:
        mass, _ = triangle_exp_integrals(self._areas, self._log_values[self._triangles])
        return mass

    def integral(self) -> float:
        return float(self.triangle_masses().sum())

    def mean(self) -> np.ndarray:
        mass, weights = triangle_exp_integrals(self._areas, self._log_values[self._triangles])
        corners = self._vertices[self._triangles]
        return np.einsum('ti,tik->k', weights, corners) / mass.sum()

    def covariance(self) -> np.ndarray:
        """Segundos momentos exactos por triângulo (diferenças divididas de exp)"""
        values = self._log_values[self._triangles]
        mass, _ = triangle_exp_integrals(self._areas, values)
        moments = triangle_exp_second_moments(self._areas, values)
        centered = self._vertices[self._triangles] - self.mean()
        cov = np.einsum('tij,tik,tjl->kl', moments, centered, centered) / mass.sum()
        return 0.5 * (cov + cov.T)

    def is_concave(self, tol: float = 1e-9) -> bool:
        """Cada plano de triângulo majora os valores em todos os vértices"""
        heights = self._vertices @ self._planes[:, :2].T + self._planes[:, 2]
        return bool(np.all(heights >= self._log_values[:, None] - tol))

    def to_dict(self) -> Dict:
        return {
            'type': 'tent_2d',
            'vertices': self._vertices.tolist(),
            'log_values': [float(v) for v in self._log_values],
            'triangles': self._triangles.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Dict) -> 'TentDensity2D':
        return cls(data['vertices'], data['log_values'], data['triangles'])

    def __repr__(self) -> str:
        return (f"TentDensity2D(vertices={self._vertices.shape[0]}, "
                f"triangles={self._triangles.shape[0]})")


class _PanelKernel:
    """
    Núcleo de característica completa

    Em coordenadas branqueadas (núcleo N(0, I)) cada triângulo é descrito
    por (ξ, η), com ξ ao longo da aresta mais longa. Em η o integral é
    exacto (diferença de Φ em escala logarítmica); em ξ usa-se
    Gauss-Legendre composta com painéis mais estreitos que o núcleo e que a
    variação das arestas e do plano.
    """

    def __init__(self, base: TentDensity2D, eigvals: np.ndarray, eigvecs: np.ndarray):
        scales = np.sqrt(eigvals)
        self.whiten = (eigvecs / scales).T
        corners = base.vertices[base.triangles] @ self.whiten.T
        slopes = base.planes[:, :2] @ (eigvecs * scales)
        offsets = base.planes[:, 2]
        rows = np.arange(corners.shape[0])

        lengths = np.linalg.norm(np.roll(corners, -1, axis=1) - corners, axis=2)
        longest = np.argmax(lengths, axis=1)
        first = corners[rows, longest]
        second = corners[rows, (longest + 1) % 3]
        apex = corners[rows, (longest + 2) % 3]
        self.axis = (second - first) / lengths[rows, longest][:, None]
        self.normal = np.column_stack([-self.axis[:, 1], self.axis[:, 0]])

        xi_first = np.einsum('ti,ti->t', first, self.axis)
        xi_second = np.einsum('ti,ti->t', second, self.axis)
        xi_apex = np.clip(np.einsum('ti,ti->t', apex, self.axis), xi_first, xi_second)
        eta_base = np.einsum('ti,ti->t', first, self.normal)
        eta_apex = np.einsum('ti,ti->t', apex, self.normal)
        slope_xi = np.einsum('ti,ti->t', slopes, self.axis)
        slope_eta = np.einsum('ti,ti->t', slopes, self.normal)

        # dois troços por triângulo, separados pela projecção do vértice oposto
        start = np.concatenate([xi_first, xi_apex])
        stop = np.concatenate([xi_apex, xi_second])
        eta_start = np.concatenate([eta_base, eta_apex])
        eta_stop = np.concatenate([eta_apex, eta_base])
        owner = np.concatenate([rows, rows])
        span = stop - start
        keep = span > 1e-12 * max(1.0, float(np.abs(corners).max()))
        start, eta_start, eta_stop, owner, span = (
            start[keep], eta_start[keep], eta_stop[keep], owner[keep], span[keep])
        gradient = (eta_stop - eta_start) / span

        steepness = np.maximum(np.maximum(1.0, np.abs(gradient)), 0.25 * np.abs(slope_xi[owner]))
        panels = np.clip(np.ceil(span * steepness / ModelConstants.SMOOTHING_PANEL_WIDTH),
                         1, ModelConstants.SMOOTHING_MAX_PANELS).astype(np.int64)
        piece = np.repeat(np.arange(span.size), panels)
        rank = np.arange(piece.size) - np.repeat(np.cumsum(panels) - panels, panels)
        width = span[piece] / panels[piece]
        left = start[piece] + rank * width

        x, w = leggauss(ModelConstants.SMOOTHING_PANEL_ORDER)
        self.xi = (left[:, None] + 0.5 * width[:, None] * (x + 1.0)).ravel()
        weights = (0.5 * width[:, None] * w).ravel()
        node_piece = np.repeat(piece, x.size)
        moving = eta_start[node_piece] + gradient[node_piece] * (self.xi - start[node_piece])
        fixed = eta_base[owner[node_piece]]
        self.lower = np.minimum(moving, fixed)
        self.upper = np.maximum(moving, fixed)
        self.owner = owner[node_piece]
        self.slope_eta = slope_eta[self.owner]
        self.constant = (np.log(weights) + offsets[self.owner] + slope_xi[self.owner] * self.xi
                         + 0.5 * self.slope_eta ** 2 - 0.5 * np.log(2.0 * np.pi))

    @property
    def size(self) -> int:
        return int(self.xi.size)

    def log_pdf(self, pts: np.ndarray) -> np.ndarray:
        out = np.empty(pts.shape[0])
        step = max(1, _MAX_BLOCK // self.size)
        for start in range(0, pts.shape[0], step):
            white = pts[start:start + step] @ self.whiten.T
            along = (white @ self.axis.T)[:, self.owner]
            across = (white @ self.normal.T)[:, self.owner]
            shift = across + self.slope_eta
            terms = (self.constant + self.slope_eta * across - 0.5 * (self.xi - along) ** 2
                     + log_ndtr_diff(self.lower - shift, self.upper - shift))
            out[start:start + step] = logsumexp(terms, axis=1)
        return out


class _LineKernel:
    """Núcleo N(0, σ² v vᵀ): integral exacto sobre a recta que passa em t com direcção v"""

    def __init__(self, base: TentDensity2D, variance: float, direction: np.ndarray):
        sigma = float(np.sqrt(variance))
        corners = base.vertices[base.triangles]
        edges = np.roll(corners, -1, axis=1) - corners
        orientation = np.sign(edges[:, 0, 0] * edges[:, 1, 1] - edges[:, 0, 1] * edges[:, 1, 0])
        # normais exteriores das arestas (i, i+1), com o comprimento da aresta
        self.normals = np.stack([edges[..., 1], -edges[..., 0]], axis=2) * orientation[:, None, None]
        self.offsets = np.einsum('tik,tik->ti', self.normals, corners)
        self.rates = sigma * (self.normals @ direction)
        tol = 1e-12 * sigma * np.linalg.norm(self.normals, axis=2)
        self.rising = self.rates > tol
        self.falling = self.rates < -tol
        self.level = ~(self.rising | self.falling)
        self.planes = base.planes
        self.beta = sigma * (base.planes[:, :2] @ direction)

    def log_pdf(self, pts: np.ndarray) -> np.ndarray:
        out = np.empty(pts.shape[0])
        step = max(1, _MAX_BLOCK // (3 * self.rates.shape[0]))
        safe = np.where(self.level, 1.0, self.rates)
        for start in range(0, pts.shape[0], step):
            chunk = pts[start:start + step]
            gaps = np.einsum('tik,ck->cti', self.normals, chunk) - self.offsets
            ratio = gaps / safe
            low = np.max(np.where(self.rising, ratio, -np.inf), axis=2)
            high = np.min(np.where(self.falling, ratio, np.inf), axis=2)
            empty = np.any(self.level & (gaps > 0), axis=2) | (low >= high)
            low = np.where(empty, 0.0, low) + self.beta
            high = np.where(empty, 0.0, high) + self.beta
            terms = (chunk @ self.planes[:, :2].T + self.planes[:, 2] + 0.5 * self.beta ** 2
                     + log_ndtr_diff(low, high))
            out[start:start + step] = logsumexp(terms, axis=1)
        return out


class SmoothedTent2D:
    """
    Densidade tenda convoluída com N(0, A)

    A geometria da integração é toda calculada no construtor. Matrizes cujo
    menor valor próprio fica abaixo de KERNEL_RANK_RATIO vezes o maior são
    tratadas como núcleos de característica 1.
    """

    def __init__(self, base: TentDensity2D, bandwidth_matrix):
        a = validate_finite(bandwidth_matrix, "bandwidth_matrix")
        if a.shape != (2, 2):
            raise InvalidInputError(f"bandwidth_matrix must be 2x2, got {a.shape}")
        if not np.allclose(a, a.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(a).max())):
            raise InvalidInputError("bandwidth_matrix must be symmetric")
        a = 0.5 * (a + a.T)
        eigvals, eigvecs = np.linalg.eigh(a)
        if eigvals[0] < -1e-12 * max(1.0, abs(eigvals[-1])):
            raise InvalidInputError("bandwidth_matrix must be positive semidefinite")
        self._base = base
        self._matrix = a
        self._matrix.setflags(write=False)

        eigvals = np.maximum(eigvals, 0.0)
        if not np.any(a):
            self._kernel = None
        elif eigvals[0] <= ModelConstants.KERNEL_RANK_RATIO * eigvals[-1]:
            self._kernel = _LineKernel(base, eigvals[-1], eigvecs[:, -1])
        else:
            self._kernel = _PanelKernel(base, eigvals, eigvecs)

    @property
    def base(self) -> TentDensity2D:
        return self._base

    @property
    def bandwidth_matrix(self) -> np.ndarray:
        return self._matrix.copy()

    @property
    def is_zero(self) -> bool:
        return self._kernel is None

    def log_pdf(self, t) -> np.ndarray:
        t = validate_finite(t, "t")
        if self._kernel is None:
            return self._base.log_pdf(t)
        single = t.ndim == 1
        pts = np.atleast_2d(t)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise InvalidInputError(f"t must have shape (2,) or (n, 2), got {t.shape}")
        with np.errstate(divide='ignore', invalid='ignore'):
            out = self._kernel.log_pdf(pts)
        return out[0] if single else out

    def pdf(self, t) -> np.ndarray:
        return np.exp(self.log_pdf(t))

    def mean(self) -> np.ndarray:
        return self._base.mean()

    def covariance(self) -> np.ndarray:
        return self._base.covariance() + self._matrix

    def to_dict(self) -> Dict:
        return {
            'type': 'smoothed_tent_2d',
            'base': self._base.to_dict(),
            'bandwidth_matrix': self._matrix.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Dict) -> 'SmoothedTent2D':
        return cls(TentDensity2D.from_dict(data['base']), data['bandwidth_matrix'])

    def __repr__(self) -> str:
        return f"SmoothedTent2D(bandwidth_matrix={self._matrix.tolist()}, base={self._base!r})"
