import unittest

import numpy as np
from scipy.stats import norm

from models.constants import ModelConstants
from models.logconcave_density import PiecewiseLogLinearDensity, SmoothedLogConcave
from models.mixture import EmConfig, MixtureModel
from models.tent_density import TentDensity2D
from models.weighted_sample import WeightedSample1D
from services import mixture_service
from services.logconcave_service import fit_smoothed, logconcave_mle
from services.mixture_service import (
    e_step,
    em_fit,
    fdr_eval,
    init_gaussian_mixture,
    log_likelihood,
    m_step,
    threshold_decisions,
)
from services.simulation_service import derive_seed, generate
from utils.exceptions import InvalidInputError, PosteriorCollapseError
from utils.observers import FitLogObserver
from utils.patterns.observer import FitEventTypes
from utils.settings import get_settings


def _uniform_alternative() -> SmoothedLogConcave:
    """Uniforme em [-1, 1] sem suavização"""
    return SmoothedLogConcave(PiecewiseLogLinearDensity([-1.0, 1.0], [np.log(0.5)] * 2), 0.0)


class TestInitGaussianMixture(unittest.TestCase):
    """Testes unitários para a inicialização por mistura gaussiana"""

    def test_pure_null_sample(self):
        """Teste: amostra N(0, 1) tem média nula perto de 0"""
        z = np.random.default_rng(1).standard_normal(1000)
        start = init_gaussian_mixture(z, seed=3)

        self.assertLess(abs(start.mu), 0.15)
        self.assertGreater(start.tau2, 0.0)
        self.assertTrue(0.0 < start.p0 < 1.0)
        self.assertEqual(start.responsibilities.shape, (1000,))

    def test_too_small_sample(self):
        """Teste: N=5"""
        with self.assertRaises(InvalidInputError):
            init_gaussian_mixture(np.arange(5.0))

    def test_degenerate_mixture_uses_fallback(self):
        """Teste: duas massas pontuais fazem colapsar as variâncias e activam o arranque robusto"""
        z = np.concatenate([np.zeros(30), np.full(30, 5.0)])
        for seed in range(4):
            start = init_gaussian_mixture(z, seed=seed)

            self.assertTrue(start.fallback)
            self.assertFalse(start.resolved)
            self.assertEqual(start.p0, ModelConstants.INIT_FALLBACK_P0)
            self.assertEqual(start.mu, 2.5)
            self.assertTrue(np.all((start.responsibilities >= 0) & (start.responsibilities <= 1)))

    def test_small_alternative_keeps_null_near_zero(self):
        """Teste: 950 N(0,1) + 50 N(3.5, 1.5) dão nulo centrado perto de 0 para várias sementes"""
        rng = np.random.default_rng(950)
        z = np.concatenate([rng.standard_normal(950), rng.normal(3.5, np.sqrt(1.5), 50)])
        for seed in range(5):
            start = init_gaussian_mixture(z, seed=seed)

            self.assertFalse(start.fallback)
            self.assertLess(abs(start.mu), 0.15, f"seed {seed}")
            self.assertTrue(0.5 <= start.tau2 <= 1.5, f"seed {seed}: tau2 {start.tau2}")
            self.assertTrue(0.5 <= start.p0 < 1.0, f"seed {seed}: p0 {start.p0}")

    def test_same_seed_same_start(self):
        """Teste: inicialização determinística para a mesma semente"""
        z = generate('U3', 300, 9).z

        first = init_gaussian_mixture(z, seed=5)
        second = init_gaussian_mixture(z, seed=5)

        self.assertEqual(first.p0, second.p0)
        np.testing.assert_array_equal(first.responsibilities, second.responsibilities)

    def test_bivariate_start(self):
        """Teste: arranque bivariado devolve média 2-D e covariância 2x2"""
        z = generate('B1', 300, 4).z
        start = init_gaussian_mixture(z, seed=0)

        self.assertEqual(np.shape(start.mu), (2,))
        self.assertEqual(np.shape(start.tau2), (2, 2))


class TestEStep(unittest.TestCase):
    """Testes unitários para o passo E e o fdr local"""

    @classmethod
    def setUpClass(cls):
        rng = np.random.default_rng(10)
        alternative, _ = fit_smoothed(WeightedSample1D(rng.normal(3.0, 1.0, 300)))
        cls.model = MixtureModel(0.8, 0.1, 1.2, alternative)

    def test_outside_alternative_support(self):
        """Teste: alternativa nula em z = 5 dá γ = 1"""
        model = MixtureModel(0.9, 0.0, 1.0, _uniform_alternative())

        self.assertEqual(float(e_step(model, [5.0])[0]), 1.0)
        self.assertEqual(fdr_eval(model, 5.0), 1.0)

    def test_equal_posterior_odds(self):
        """Teste: p0 f0 = (1 - p0) f1 dá γ = 0.5"""
        model = MixtureModel(0.5, 0.0, 2.0 / np.pi, _uniform_alternative())

        self.assertAlmostEqual(float(e_step(model, [0.0])[0]), 0.5, places=12)
        self.assertAlmostEqual(fdr_eval(model, 0.0), 0.5, places=12)

    def test_direct_density_arithmetic(self):
        """Teste: γ coincide com p0 f0 / f calculado directamente"""
        z = np.random.default_rng(2).uniform(-3.0, 6.0, 100)
        null = self.model.p0 * norm.pdf(z, loc=0.1, scale=np.sqrt(1.2))
        alt = (1.0 - self.model.p0) * self.model.alternative.pdf(z)

        np.testing.assert_allclose(e_step(self.model, z), null / (null + alt), rtol=0.0, atol=1e-12)

    def test_fdr_eval_matches_e_step(self):
        """Teste: fdr_eval ponto a ponto igual a e_step"""
        z = np.random.default_rng(3).uniform(-3.0, 6.0, 100)
        gammas = e_step(self.model, z)
        pointwise = np.array([fdr_eval(self.model, t) for t in z])

        np.testing.assert_allclose(pointwise, gammas, rtol=0.0, atol=1e-12)
        np.testing.assert_allclose(fdr_eval(self.model, z), gammas, rtol=0.0, atol=1e-12)

    def test_bounds(self):
        """Teste: γ em [0, 1] também nas caudas"""
        z = np.linspace(-40.0, 40.0, 401)
        gammas = e_step(self.model, z)

        self.assertTrue(np.all((gammas >= 0.0) & (gammas <= 1.0)))

    def test_indeterminate_falls_back_to_p0(self):
        """Teste: as duas densidades nulas em z = 1e200 dão γ = p0"""
        self.assertEqual(float(e_step(self.model, [1e200])[0]), self.model.p0)

    def test_non_finite_z(self):
        """Teste: z não finito"""
        with self.assertRaises(InvalidInputError):
            fdr_eval(self.model, [0.0, np.inf])

    def test_log_likelihood_matches_density(self):
        """Teste: log-verosimilhança = Σ log f(z)"""
        z = np.array([-1.0, 0.5, 2.0, 4.0])
        f = (self.model.p0 * norm.pdf(z, loc=0.1, scale=np.sqrt(1.2))
             + (1.0 - self.model.p0) * self.model.alternative.pdf(z))

        self.assertAlmostEqual(log_likelihood(self.model, z), float(np.sum(np.log(f))), places=10)


class TestThresholdDecisions(unittest.TestCase):
    """Testes unitários para as decisões por limiar"""

    def test_boundary_is_inclusive(self):
        """Teste: {0.1, 0.2, 0.3} com limiar 0.2"""
        np.testing.assert_array_equal(threshold_decisions([0.1, 0.2, 0.3], 0.2), [True, True, False])

    def test_all_false_and_all_true(self):
        """Teste: limiar abaixo do mínimo e limiar 0.99"""
        fdrs = [0.3, 0.5, 0.9]

        self.assertFalse(np.any(threshold_decisions(fdrs, 0.1)))
        self.assertTrue(np.all(threshold_decisions(fdrs, 0.99)))

    def test_cutoff_outside_unit_interval(self):
        """Teste: limiar fora de (0, 1)"""
        with self.assertRaises(InvalidInputError):
            threshold_decisions([0.1], 1.0)


class TestMStep(unittest.TestCase):
    """Testes unitários para o passo M"""

    def test_symmetric_pairs(self):
        """Teste: γ = 0.5 e pares {-1, 1} dão p0 = 0.5, mu = 0, tau2 = 1"""
        z = np.tile([-1.0, 1.0], 10)
        result = m_step(z, np.full(20, 0.5))

        self.assertAlmostEqual(result.p0, 0.5, places=12)
        self.assertAlmostEqual(result.mu, 0.0, places=12)
        self.assertAlmostEqual(result.tau2, 1.0, places=12)

    def test_indicator_responsibilities(self):
        """Teste: γ indicadora reduz-se aos momentos da subamostra"""
        rng = np.random.default_rng(17)
        null = rng.standard_normal(100)
        alt = rng.normal(3.0, 1.0, 100)
        z = np.concatenate([null, alt])
        gammas = np.concatenate([np.ones(100), np.zeros(100)])

        result = m_step(z, gammas)

        self.assertAlmostEqual(result.p0, 0.5, places=12)
        self.assertAlmostEqual(result.mu, float(np.mean(null)), delta=1e-12)
        self.assertAlmostEqual(result.tau2, float(np.var(null)), delta=1e-12)

        direct = logconcave_mle(WeightedSample1D(alt))
        np.testing.assert_allclose(result.alternative.base.knots, direct.knots)
        np.testing.assert_allclose(result.alternative.base.log_values, direct.log_values, atol=1e-9)

    def test_weighted_moments(self):
        """Teste: momentos ponderados contra a soma directa"""
        rng = np.random.default_rng(19)
        z = rng.normal(1.0, 2.0, 150)
        gammas = rng.uniform(0.0, 1.0, 150)

        result = m_step(z, gammas)
        mu = np.sum(gammas * z) / np.sum(gammas)

        self.assertAlmostEqual(result.p0, float(np.mean(gammas)), delta=1e-12)
        self.assertAlmostEqual(result.mu, float(mu), delta=1e-12)
        self.assertAlmostEqual(result.tau2, float(np.sum(gammas * (z - mu) ** 2) / np.sum(gammas)), delta=1e-12)

    def test_all_null_collapses_alternative(self):
        """Teste: γ = 1 em todo o lado"""
        with self.assertRaises(PosteriorCollapseError) as ctx:
            m_step(np.linspace(-2.0, 2.0, 30), np.ones(30))
        self.assertEqual(ctx.exception.side, "alternative")

    def test_all_alternative_collapses_null(self):
        """Teste: γ = 0 em todo o lado"""
        with self.assertRaises(PosteriorCollapseError) as ctx:
            m_step(np.linspace(-2.0, 2.0, 30), np.zeros(30))
        self.assertEqual(ctx.exception.side, "null")

    def test_responsibilities_out_of_range(self):
        """Teste: γ fora de [0, 1]"""
        with self.assertRaises(InvalidInputError):
            m_step(np.linspace(-2.0, 2.0, 30), np.full(30, 1.5))

    def test_smoothing_disabled(self):
        """Teste: smoothing=False fixa a largura de banda em 0"""
        z = np.random.default_rng(23).standard_normal(60)
        result = m_step(z, np.full(60, 0.5), smoothing=False)

        self.assertEqual(result.alternative.bandwidth, 0.0)

    def test_warm_start_extends_previous_tent(self):
        """Teste: pontos fora do suporte anterior arrancam abaixo do mínimo"""
        square = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]]
        tent = TentDensity2D(square, [0.0, -1.0, -2.0, -1.0], [[0, 1, 2], [0, 2, 3]])
        start = mixture_service._warm_start(tent, np.array([[0.0, 0.0], [0.5, 0.5], [3.0, 3.0]]))

        np.testing.assert_allclose(start, [-1.0, -1.5, -2.5], atol=1e-12)
        self.assertIsNone(mixture_service._warm_start(tent, np.array([[3.0, 3.0], [-4.0, 0.0]])))


class TestEmFit(unittest.TestCase):
    """Testes unitários para o ajuste EM"""

    @classmethod
    def setUpClass(cls):
        cls.sample = generate('U3', 500, 31)

    def test_unsmoothed_likelihood_is_monotone(self):
        """Teste: sem suavização a log-verosimilhança não decresce"""
        config = EmConfig(max_iterations=25, rel_tol=1e-14, refit_bandwidth_each_iter=False)
        _, trace = em_fit(self.sample.z, config)
        lls = trace.log_likelihoods

        for previous, current in zip(lls[:-1], lls[1:]):
            self.assertGreaterEqual(current, previous - 1e-8 * max(1.0, abs(previous)))

    def test_returns_best_iterate(self):
        """Teste: o modelo devolvido tem a maior log-verosimilhança do registo"""
        model, trace = em_fit(self.sample.z, EmConfig(max_iterations=15))

        self.assertAlmostEqual(log_likelihood(model, self.sample.z), trace.best_log_likelihood, places=8)
        self.assertEqual(trace.records[trace.best_iteration - 1].log_likelihood, trace.best_log_likelihood)

    def test_location_equivariance(self):
        """Teste: ajustar z + b desloca mu e as curvas de fdr, p0 igual"""
        config = EmConfig(max_iterations=20, rel_tol=1e-14, init_seed=2)
        shift = 3.0
        model, _ = em_fit(self.sample.z, config)
        shifted, _ = em_fit(self.sample.z + shift, config)
        grid = np.linspace(-2.0, 4.0, 20)

        self.assertAlmostEqual(shifted.mu, model.mu + shift, delta=1e-6)
        self.assertAlmostEqual(shifted.p0, model.p0, delta=1e-6)
        np.testing.assert_allclose(fdr_eval(shifted, grid + shift), fdr_eval(model, grid), atol=1e-6)

    def test_trace_records_every_iteration(self):
        """Teste: um registo por iteração, numerado a partir de 1"""
        _, trace = em_fit(self.sample.z, EmConfig(max_iterations=6, rel_tol=1e-14))

        self.assertEqual([r.iteration for r in trace.records], list(range(1, trace.iterations + 1)))
        self.assertLessEqual(trace.iterations, 6)

    def test_observer_events(self):
        """Teste: observador recebe início, uma notificação por iteração e fim"""
        observer = FitLogObserver()
        _, trace = em_fit(self.sample.z, EmConfig(max_iterations=5, rel_tol=1e-14), observers=[observer])
        counts = observer.get_event_stats()['event_breakdown']

        self.assertEqual(counts[FitEventTypes.FIT_STARTED], 1)
        self.assertEqual(counts[FitEventTypes.INIT_COMPLETE], 1)
        self.assertEqual(counts[FitEventTypes.EM_ITERATION], trace.iterations)
        self.assertEqual(counts[FitEventTypes.FIT_COMPLETE], 1)

    def test_initial_gammas_skip_initialization(self):
        """Teste: responsabilidades iniciais dadas não geram INIT_COMPLETE"""
        observer = FitLogObserver()
        em_fit(self.sample.z, EmConfig(max_iterations=2), initial_gammas=np.full(500, 0.8),
               observers=[observer])

        self.assertNotIn(FitEventTypes.INIT_COMPLETE, observer.event_count)

    def test_bivariate_fit(self):
        """Teste: ajuste bivariado curto devolve fdr em [0, 1]"""
        sample = generate('B1', 200, 8)
        model, trace = em_fit(sample.z, EmConfig(max_iterations=3))
        fdrs = fdr_eval(model, sample.z)

        self.assertEqual(model.dimension, 2)
        self.assertGreaterEqual(trace.iterations, 1)
        self.assertTrue(np.all((fdrs >= 0.0) & (fdrs <= 1.0)))
        self.assertIsInstance(fdr_eval(model, [0.0, 0.0]), float)


class TestEmRecovery(unittest.TestCase):
    """Recuperação de p0 em cenários simulados (lentos, activar com FDRMIX_SLOW_TESTS=1)"""

    @classmethod
    def setUpClass(cls):
        if not get_settings().slow_tests:
            raise unittest.SkipTest("slow tests disabled")

    def test_two_component_start(self):
        """Teste: 950 de N(0, 1) e 50 de N(3.5, 1.5)"""
        rng = np.random.default_rng(950)
        z = np.concatenate([rng.standard_normal(950), rng.normal(3.5, np.sqrt(1.5), 50)])
        start = init_gaussian_mixture(z, seed=0)

        self.assertLess(abs(start.mu), 0.15)
        self.assertTrue(0.85 <= start.p0 <= 0.99)

    def test_scenario_one_p0(self):
        """Teste: U1, N=1000, p0 estimado em [0.90, 0.96]"""
        model, _ = em_fit(generate('U1', 1000, 101).z)

        self.assertTrue(0.90 <= model.p0 <= 0.96, model.p0)

    def test_scenario_three_p0(self):
        """Teste: U3, N=1000, p0 estimado abaixo do de U1 e em [0.60, 0.90]"""
        model, _ = em_fit(generate('U3', 1000, 103).z)
        separated, _ = em_fit(generate('U1', 1000, 101).z)

        self.assertTrue(0.60 <= model.p0 <= 0.90, model.p0)
        self.assertLess(model.p0, separated.p0)

    def test_gamma_alternative_fits(self):
        """Teste: U4, seis réplicas, com e sem reajuste da largura de banda"""
        for index in range(6):
            z = generate('U4', 1000, derive_seed(1, index)).z
            for refit in (True, False):
                with self.subTest(run=index, refit=refit):
                    model, trace = em_fit(z, EmConfig(refit_bandwidth_each_iter=refit))
                    fdrs = fdr_eval(model, z)

                    self.assertTrue(np.isfinite(trace.best_log_likelihood))
                    self.assertTrue(np.all((fdrs >= 0.0) & (fdrs <= 1.0)))
                    self.assertGreater(model.p0, 0.5)
                    if refit:
                        self.assertTrue(0.65 <= model.p0 <= 0.99, model.p0)

    def test_pure_null_recovery(self):
        """Teste: amostra só nula com arranque quase todo nulo mantém p0 >= 0.95"""
        z = np.random.default_rng(77).standard_normal(1000)
        model, _ = em_fit(z, initial_gammas=np.full(1000, 0.99))

        self.assertGreaterEqual(model.p0, 0.95)

    def test_bivariate_scenario_p0(self):
        """Teste: B1, N=1000, p0 estimado em [0.88, 0.99]"""
        model, _ = em_fit(generate('B1', 1000, 201).z)

        self.assertTrue(0.88 <= model.p0 <= 0.99, model.p0)


if __name__ == '__main__':
    unittest.main()
