import unittest

import numpy as np
from scipy.integrate import trapezoid
from scipy.optimize import brentq
from scipy.stats import gamma as gamma_dist
from scipy.stats import norm

from models.scenario import ALTERNATIVE_LABEL, NULL_LABEL, get_scenario
from services.simulation_service import (
    derive_seed,
    empirical_fdr_fnr,
    generate,
    rmse,
    splitmix64,
    true_density,
    true_fdr,
)
from utils.exceptions import InvalidInputError, UndefinedMetricError, UnknownScenarioError
from utils.numerics import gauss_legendre


class TestGenerate(unittest.TestCase):
    """Testes unitários para a geração dos cenários"""

    @classmethod
    def setUpClass(cls):
        cls.u1 = generate('U1', 1_000_000, 2024)

    def test_null_label_fraction(self):
        """Teste: U1, N=10⁶, fracção de nulos 0.95 ± 0.001"""
        self.assertAlmostEqual(float(self.u1.is_null.mean()), 0.95, delta=0.001)

    def test_null_variance(self):
        """Teste: variância da subamostra nula 1 + 10⁻⁶ ± 0.005"""
        null = self.u1.z[self.u1.is_null]

        self.assertAlmostEqual(float(np.var(null)), 1.0 + 1e-6, delta=0.005)

    def test_gamma_alternative_mean(self):
        """Teste: U4, média da alternativa 3.0 ± 0.01 (shape 12, scale 0.25)"""
        sample = generate('U4', 4_000_000, 7)
        alt = sample.z[sample.labels == ALTERNATIVE_LABEL]

        self.assertAlmostEqual(float(alt.mean()), 3.0, delta=0.01)

    def test_deterministic_for_seed(self):
        """Teste: a mesma semente dá a mesma amostra"""
        first = generate('U5', 500, 99)
        second = generate('U5', 500, 99)

        np.testing.assert_array_equal(first.z, second.z)
        np.testing.assert_array_equal(first.labels, second.labels)
        self.assertFalse(np.array_equal(first.z, generate('U5', 500, 100).z))

    def test_bivariate_shape(self):
        """Teste: B1 devolve pontos (N, 2) e rótulos 0/1"""
        sample = generate('B1', 300, 5)

        self.assertEqual(sample.z.shape, (300, 2))
        self.assertEqual(sample.dimension, 2)
        self.assertTrue(set(np.unique(sample.labels)) <= {NULL_LABEL, ALTERNATIVE_LABEL})

    def test_bivariate_null_correlation(self):
        """Teste: a subamostra nula de B1 tem a covariância base"""
        sample = generate('B1', 200_000, 3)
        null = sample.z[sample.is_null]

        np.testing.assert_allclose(np.cov(null, rowvar=False), get_scenario('B1').base_covariance, atol=0.02)

    def test_invalid_size(self):
        """Teste: N = 0"""
        with self.assertRaises(InvalidInputError):
            generate('U1', 0, 1)

    def test_unknown_scenario(self):
        """Teste: identificador desconhecido"""
        with self.assertRaises(UnknownScenarioError):
            generate('U9', 10, 1)


class TestSeeds(unittest.TestCase):
    """Testes unitários para a derivação de sementes"""

    def test_splitmix64_reference_value(self):
        """Teste: primeiro valor do splitmix64 a partir de 0"""
        self.assertEqual(splitmix64(0), 0xE220A8397B1DCDAF)

    def test_derived_seeds(self):
        """Teste: sementes determinísticas, distintas e de 64 bits"""
        seeds = [derive_seed(42, i) for i in range(100)]

        self.assertEqual(seeds, [derive_seed(42, i) for i in range(100)])
        self.assertEqual(len(set(seeds)), 100)
        self.assertTrue(all(0 <= s < 2 ** 64 for s in seeds))
        self.assertNotEqual(derive_seed(42, 0), derive_seed(43, 0))


class TestTrueDensity(unittest.TestCase):
    """Testes unitários para as densidades verdadeiras"""

    def test_normal_null_closed_form(self):
        """Teste: U1 nulo em z = 0"""
        expected = 1.0 / np.sqrt(2.0 * np.pi * (1.0 + 1e-6))

        self.assertAlmostEqual(true_density('U1', 'null', 0.0), expected, places=14)
        self.assertAlmostEqual(true_density('U1', 'null', 0.0), 0.3989421, places=6)

    def test_normal_alternative_closed_form(self):
        """Teste: U1 alternativa em z = 3.5"""
        self.assertAlmostEqual(true_density('U1', 'alternative', 3.5), 0.3257350, places=7)

    def test_gamma_alternative_against_direct_integration(self):
        """Teste: U4 alternativa em z = 3 contra integração numérica directa"""
        delta = np.linspace(0.0, 20.0, 400_001)
        integrand = norm.pdf(3.0 - delta) * gamma_dist.pdf(delta, 12.0, scale=0.25)
        expected = float(trapezoid(integrand, delta))

        self.assertAlmostEqual(true_density('U4', 'alternative', 3.0), expected, delta=1e-8)

    def test_marginal_is_mixture(self):
        """Teste: marginal = p0 f0 + (1 - p0) f1"""
        z = np.array([-1.0, 0.5, 3.0])
        scenario = get_scenario('U5')
        expected = (scenario.p0 * true_density(scenario, 'null', z)
                    + (1.0 - scenario.p0) * true_density(scenario, 'alternative', z))

        np.testing.assert_allclose(true_density(scenario, 'marginal', z), expected, rtol=1e-14)

    def test_bivariate_gamma_symmetry_and_mass(self):
        """Teste: B4 alternativa simétrica nas coordenadas e com massa 1"""
        points = np.array([[1.0, 4.0], [2.5, 3.0], [-0.5, 2.0]])

        np.testing.assert_allclose(true_density('B4', 'alternative', points),
                                   true_density('B4', 'alternative', points[:, ::-1]), rtol=1e-10)

        edges = np.linspace(-5.0, 11.0, 17)
        rules = [gauss_legendre(a, b, 8) for a, b in zip(edges[:-1], edges[1:])]
        nodes = np.concatenate([r[0] for r in rules])
        weights = np.concatenate([r[1] for r in rules])
        x1, x2 = np.meshgrid(nodes, nodes, indexing='ij')
        grid = np.column_stack([x1.ravel(), x2.ravel()])
        mass = float(np.dot(np.outer(weights, weights).ravel(), true_density('B4', 'alternative', grid)))

        self.assertAlmostEqual(mass, 1.0, delta=1e-6)

    def test_unknown_component(self):
        """Teste: componente desconhecida"""
        with self.assertRaises(InvalidInputError):
            true_density('U1', 'other', 0.0)

    def test_bivariate_needs_pairs(self):
        """Teste: cenário bivariado com pontos escalares"""
        with self.assertRaises(InvalidInputError):
            true_density('B1', 'null', [0.0, 1.0, 2.0])


class TestTrueFdr(unittest.TestCase):
    """Testes unitários para o fdr verdadeiro"""

    def test_far_left_is_null(self):
        """Teste: U1 em z = -5"""
        self.assertGreaterEqual(true_fdr('U1', -5.0), 0.999)

    def test_crossing_point(self):
        """Teste: U3 no ponto onde p0 f0 = p1 f1 dá 0.5"""
        scenario = get_scenario('U3')

        def gap(z):
            return (scenario.p0 * true_density(scenario, 'null', z)
                    - (1.0 - scenario.p0) * true_density(scenario, 'alternative', z))

        root = brentq(gap, 0.0, 5.0, xtol=1e-14)

        self.assertAlmostEqual(true_fdr(scenario, root), 0.5, places=9)

    def test_vector_matches_scalar(self):
        """Teste: chamada vectorizada igual às chamadas escalares"""
        z = np.linspace(-3.0, 7.0, 25)
        for scenario_id in ('U2', 'U6'):
            vector = true_fdr(scenario_id, z)
            scalars = np.array([true_fdr(scenario_id, t) for t in z])
            np.testing.assert_allclose(vector, scalars, rtol=0.0, atol=1e-15)

    def test_bounds(self):
        """Teste: fdr verdadeiro em [0, 1]"""
        values = true_fdr('B2', np.random.default_rng(1).uniform(-4.0, 8.0, (200, 2)))

        self.assertTrue(np.all((values >= 0.0) & (values <= 1.0)))

    def test_oracle_self_consistency(self):
        """Teste: média do fdr verdadeiro nos declarados aproxima o FDR empírico"""
        sample = generate('U3', 200_000, 11)
        fdr = true_fdr('U3', sample.z)
        declared = fdr <= 0.2
        empirical, _ = empirical_fdr_fnr(declared, sample.labels)

        self.assertAlmostEqual(float(fdr[declared].mean()), empirical, delta=0.02)


class TestMetrics(unittest.TestCase):
    """Testes unitários para RMSE e FDR/FNR empíricos"""

    def test_rmse_examples(self):
        """Teste: exemplos da restrição fdr verdadeiro <= 0.5"""
        truth = np.array([0.1, 0.3, 0.45, 0.9])

        self.assertEqual(rmse(truth, truth), 0.0)
        self.assertAlmostEqual(rmse([0.5, 0.0], [0.6, 0.4]), 0.4, places=15)
        self.assertAlmostEqual(rmse([0.0, 0.5], [0.6, 0.4]), 0.1, places=15)
        self.assertAlmostEqual(rmse(truth + 0.01, truth), 0.01, places=12)

    def test_rmse_undefined(self):
        """Teste: nenhum fdr verdadeiro <= 0.5"""
        with self.assertRaises(UndefinedMetricError):
            rmse([0.2, 0.3], [0.7, 0.8])

    def test_rmse_length_mismatch(self):
        """Teste: comprimentos diferentes"""
        with self.assertRaises(InvalidInputError):
            rmse([0.1], [0.1, 0.2])

    def test_oracle_decisions(self):
        """Teste: declarar exactamente as alternativas dá (0, 0)"""
        labels = np.array([0, 1, 0, 1, 1])

        self.assertEqual(empirical_fdr_fnr(labels == 1, labels), (0.0, 0.0))

    def test_declare_nothing(self):
        """Teste: sem declarações FDR = 0 e FNR = fracção de alternativas"""
        labels = np.array([0, 1, 0, 0, 1])

        self.assertEqual(empirical_fdr_fnr(np.zeros(5, dtype=bool), labels), (0.0, 0.4))

    def test_declare_everything(self):
        """Teste: tudo declarado dá FDR = fracção de nulos e FNR = 0"""
        labels = np.array([0, 1, 0, 0, 1])

        self.assertEqual(empirical_fdr_fnr(np.ones(5, dtype=bool), labels), (0.6, 0.0))


if __name__ == '__main__':
    unittest.main()
