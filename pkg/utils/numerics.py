"""
Utilitários numéricos partilhados pelos estimadores log-côncavos

Formas fechadas de integrais de exp(afim) sobre segmentos e triângulos,
diferenças estáveis de CDFs normais e regras de Gauss.
"""

from typing import Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.linalg import expm
from scipy.special import log_ndtr

_SERIES_SWITCH = 0.5
_SERIES_TERMS = 20


def _exp_series(d: np.ndarray, order: int) -> np.ndarray:
    """Σ_k d^k / (k! (k + order + 1)), ou seja ∫_0^1 v^order e^{d v} dv"""
    term = np.ones_like(d)
    total = term / (order + 1)
    for k in range(1, _SERIES_TERMS):
        term = term * d / k
        total = total + term / (k + order + 1)
    return total


def _decaying_moments(d: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """∫_0^1 v^k e^{d v} dv para k = 0, 1, 2 e d <= 0 (sem overflow)"""
    small = d > -_SERIES_SWITCH
    ds = np.where(small, -1.0, d)
    em1 = np.expm1(ds)
    e = em1 + 1.0
    j0 = em1 / ds
    j1 = (ds * e - em1) / ds ** 2
    j2 = (ds ** 2 * e - 2.0 * (ds * e - em1)) / ds ** 3
    if np.any(small):
        near = np.where(small, d, 0.0)
        j0 = np.where(small, _exp_series(near, 0), j0)
        j1 = np.where(small, _exp_series(near, 1), j1)
        j2 = np.where(small, _exp_series(near, 2), j2)
    return j0, j1, j2


def exp_moments(r, s) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Momentos de exp de uma função linear no intervalo unitário

    Para um segmento de comprimento L cuja log-densidade vai linearmente de
    r a s, os integrais de e^phi, u e^phi e u^2 e^phi (u medido a partir da
    extremidade esquerda) são L * m0, L^2 * m1 e L^3 * m2.

    Os integrais são sempre calculados a partir da extremidade mais alta,
    onde a exponencial decai; segmentos crescentes são reflectidos
    (v -> 1 - v) e os momentos recompostos.

    Args:
        r: Log-densidade na extremidade esquerda (array-like)
        s: Log-densidade na extremidade direita (array-like)

    Returns:
        (m0, m1, m2) com m_k = ∫_0^1 v^k exp(r + (s - r) v) dv
    """
    r = np.asarray(r, dtype=float)
    s = np.asarray(s, dtype=float)
    rising = s > r
    top = np.where(rising, s, r)
    b0, b1, b2 = _decaying_moments(-np.abs(s - r))
    scale = np.exp(top)
    m0 = scale * b0
    m1 = scale * np.where(rising, b0 - b1, b1)
    m2 = scale * np.where(rising, b0 - 2.0 * b1 + b2, b2)
    return m0, m1, m2


def log_ndtr_diff(lo, hi) -> np.ndarray:
    """
    log(Phi(hi) - Phi(lo)) para hi >= lo, exacto em ambas as caudas

    Devolve -inf onde os dois argumentos coincidem.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    # reflecte para o menor argumento ficar na cauda esquerda
    flip = lo > 0
    a = np.where(flip, -hi, lo)
    b = np.where(flip, -lo, hi)
    log_b = log_ndtr(b)
    log_a = log_ndtr(a)
    with np.errstate(divide='ignore', invalid='ignore'):
        out = log_b + np.log1p(-np.exp(log_a - log_b))
    return np.where(b > a, out, -np.inf)


def exp_divided_difference_table(nodes) -> np.ndarray:
    """
    Diferenças divididas de exp sobre sequências consecutivas de nós

    Identidade de Opitz: para a matriz bidiagonal superior J com os nós na
    diagonal e uns acima dela, exp(J)[i, j] = exp[x_i, ..., x_j]. Nós
    repetidos (caso confluente) não precisam de tratamento especial.

    Args:
        nodes: Array (T, k) de sequências de nós

    Returns:
        Array (T, k, k) cuja entrada [t, i, j] é exp[x_i..x_j] da linha t
    """
    nodes = np.atleast_2d(np.asarray(nodes, dtype=float))
    count, k = nodes.shape
    shift = nodes.max(axis=1)
    mats = np.zeros((count, k, k))
    idx = np.arange(k)
    mats[:, idx, idx] = nodes - shift[:, None]
    mats[:, idx[:-1], idx[1:]] = 1.0
    return np.exp(shift)[:, None, None] * expm(mats)


def exp_divided_difference(nodes) -> np.ndarray:
    """exp[x_0, ..., x_{k-1}] para cada linha de nós"""
    table = exp_divided_difference_table(nodes)
    return table[:, 0, -1]


def gauss_legendre(a: float, b: float, order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Nós e pesos de Gauss-Legendre em [a, b]"""
    x, w = leggauss(order)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def triangle_exp_integrals(areas, values) -> Tuple[np.ndarray, np.ndarray]:
    """
    Integrais de exp(afim) sobre triângulos

    Args:
        areas: Áreas |T|, shape (T,)
        values: Valores da função afim nos 3 vértices, shape (T, 3)

    Returns:
        (mass, vertex_weights): mass[t] = ∫_T e^f e vertex_weights[t, i] =
        ∫_T λ_i e^f (λ_i coordenada baricêntrica), que é também a derivada
        de mass[t] em ordem ao valor no vértice i
    """
    values = np.atleast_2d(np.asarray(values, dtype=float))
    scale = 2.0 * np.asarray(areas, dtype=float)
    table = exp_divided_difference_table(np.concatenate([values, values], axis=1))
    mass = scale * table[:, 0, 2]
    vertex_weights = scale[:, None] * np.stack(
        [table[:, 0, 3], table[:, 1, 4], table[:, 2, 5]], axis=1
    )
    return mass, vertex_weights


def triangle_exp_second_moments(areas, values) -> np.ndarray:
    """
    ∫_T λ_i λ_j e^f para cada triângulo, shape (T, 3, 3)

    Igual a 2|T| (1 + δ_ij) exp[y_0, y_1, y_2, y_i, y_j].
    """
    values = np.atleast_2d(np.asarray(values, dtype=float))
    count = values.shape[0]
    pairs = [(i, j) for i in range(3) for j in range(i, 3)]
    nodes = np.concatenate(
        [np.column_stack([values, values[:, i], values[:, j]]) for i, j in pairs], axis=0
    )
    dd = exp_divided_difference(nodes).reshape(len(pairs), count)
    scale = 2.0 * np.asarray(areas, dtype=float)
    out = np.empty((count, 3, 3))
    for k, (i, j) in enumerate(pairs):
        entry = scale * (2.0 if i == j else 1.0) * dd[k]
        out[:, i, j] = entry
        out[:, j, i] = entry
    return out
