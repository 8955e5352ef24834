import unittest

import numpy as np
from scipy.integrate import quad

from models.constants import ModelConstants
from models.fit_artifact import FitArtifact
from models.input_table import InputTable
from models.logconcave_density import PiecewiseLogLinearDensity, SmoothedLogConcave
from models.metrics_report import MetricsReport, RunMetrics, five_number_summary, mean_and_se
from models.mixture import EmConfig, EmIterationRecord, EmTrace, MixtureModel
from models.scenario import SCENARIOS, get_scenario
from models.tent_density import SmoothedTent2D, TentDensity2D
from models.weighted_sample import WeightedSample1D, WeightedSample2D
from storage import TableRepository, format_cell
from utils.exceptions import (
    DegenerateSampleError,
    DegenerateSupportError,
    InputParseError,
    InvalidInputError,
    UnknownScenarioError,
)

KNOTS = [0.0, 1.0, 3.0]
LOG_VALUES = [0.0, 0.5, -1.0]


def _density():
    return PiecewiseLogLinearDensity(KNOTS, LOG_VALUES).normalized()


class TestWeightedSample(unittest.TestCase):
    """Testes unitários para as amostras ponderadas"""

    def test_duplicates_are_merged(self):
        """Teste: pontos repetidos somam os pesos"""
        sample = WeightedSample1D([2.0, 1.0, 1.0])

        np.testing.assert_array_equal(sample.points, [1.0, 2.0])
        np.testing.assert_allclose(sample.weights, [2 / 3, 1 / 3], rtol=1e-15)
        self.assertEqual(sample.n_observations, 3)

    def test_sample_variance_uses_n_minus_one(self):
        """Teste: pesos iguais dão a variância amostral N-1"""
        sample = WeightedSample1D([2.0, 1.0, 1.0])

        self.assertAlmostEqual(sample.sample_variance(), np.var([2.0, 1.0, 1.0], ddof=1), places=14)

    def test_unequal_weights_use_normalized_moment(self):
        """Teste: pesos não uniformes dão Σ w (z - média)²"""
        sample = WeightedSample1D([0.0, 1.0], [3.0, 1.0])

        self.assertAlmostEqual(sample.mean(), 0.25, places=15)
        self.assertAlmostEqual(sample.sample_variance(), 0.1875, places=15)

    def test_negligible_weights_are_dropped(self):
        """Teste: pesos abaixo de 10⁻¹² do máximo são descartados"""
        sample = WeightedSample1D([0.0, 1.0, 5.0], [1.0, 1.0, 1e-14])

        np.testing.assert_array_equal(sample.points, [0.0, 1.0])

    def test_degenerate_samples(self):
        """Teste: um só ponto distinto, pesos nulos ou negativos"""
        with self.assertRaises(DegenerateSampleError):
            WeightedSample1D([1.0, 1.0])
        with self.assertRaises(DegenerateSampleError):
            WeightedSample1D([1.0, 2.0], [0.0, 0.0])
        with self.assertRaises(InvalidInputError):
            WeightedSample1D([1.0, 2.0], [1.0, -1.0])

    def test_bivariate_collinear(self):
        """Teste: pontos colineares não têm envelope 2-D"""
        with self.assertRaises(DegenerateSupportError):
            WeightedSample2D([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]])

    def test_bivariate_covariance(self):
        """Teste: covariância com pesos iguais igual a np.cov"""
        points = np.random.default_rng(0).normal(size=(40, 2))

        np.testing.assert_allclose(WeightedSample2D(points).sample_covariance(),
                                   np.cov(points, rowvar=False), rtol=1e-12, atol=1e-14)


class TestPiecewiseLogLinearDensity(unittest.TestCase):
    """Testes unitários para a densidade log-linear por troços"""

    def test_validation(self):
        """Teste: nós não crescentes e comprimentos diferentes"""
        with self.assertRaises(InvalidInputError):
            PiecewiseLogLinearDensity([0.0, 0.0, 1.0], [0.0, 0.0, 0.0])
        with self.assertRaises(InvalidInputError):
            PiecewiseLogLinearDensity([0.0, 1.0], [0.0])

    def test_normalized_integral(self):
        """Teste: integral exacta igual à quadratura"""
        raw = PiecewiseLogLinearDensity(KNOTS, LOG_VALUES)
        numeric, _ = quad(lambda x: float(raw.pdf(x)), 0.0, 3.0, points=[1.0])

        self.assertAlmostEqual(raw.integral(), numeric, places=10)
        self.assertAlmostEqual(raw.normalized().integral(), 1.0, places=14)
        self.assertTrue(raw.is_concave())

    def test_cdf_against_quadrature(self):
        """Teste: cdf igual à integral numérica da densidade"""
        density = _density()
        for x in (0.3, 1.0, 2.2, 2.9):
            expected, _ = quad(lambda s: float(density.pdf(s)), 0.0, x)
            self.assertAlmostEqual(float(density.cdf(x)), expected, places=9)
        self.assertEqual(float(density.cdf(-1.0)), 0.0)
        self.assertEqual(float(density.cdf(5.0)), 1.0)

    def test_moments_against_quadrature(self):
        """Teste: média e variância por troços"""
        density = _density()
        mean, _ = quad(lambda s: s * float(density.pdf(s)), 0.0, 3.0, points=[1.0])
        second, _ = quad(lambda s: (s - mean) ** 2 * float(density.pdf(s)), 0.0, 3.0, points=[1.0])

        self.assertAlmostEqual(density.mean(), mean, places=9)
        self.assertAlmostEqual(density.variance(), second, places=9)

    def test_zero_outside_support(self):
        """Teste: log-densidade -inf fora de [t_1, t_m]"""
        density = _density()

        self.assertEqual(float(density.log_pdf(-0.01)), -np.inf)
        self.assertEqual(float(density.pdf(3.5)), 0.0)
        self.assertTrue(np.isfinite(density.log_pdf(3.0)))

    def test_smoothed_cdf(self):
        """Teste: cdf da densidade suavizada contra quadratura"""
        smoothed = SmoothedLogConcave(_density(), 0.4)
        for x in (-0.5, 1.2, 3.8):
            expected, _ = quad(lambda s: float(smoothed.pdf(s)), -8.0, x)
            self.assertAlmostEqual(float(smoothed.cdf(x)), expected, places=7)

    def test_negative_bandwidth(self):
        """Teste: largura de banda negativa"""
        with self.assertRaises(InvalidInputError):
            SmoothedLogConcave(_density(), -0.1)


class TestTentDensity(unittest.TestCase):
    """Testes unitários para a tenda bivariada"""

    def setUp(self):
        self.square = np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]])
        self.tent = TentDensity2D(self.square, np.full(4, np.log(0.25)), [[0, 1, 2], [0, 2, 3]])

    def test_uniform_square(self):
        """Teste: densidade 1/4 dentro do quadrado e -inf fora"""
        inside = np.array([[0.0, 0.0], [0.5, -0.9]])
        outside = np.array([[1.5, 0.0], [0.0, -1.01]])

        np.testing.assert_allclose(self.tent.log_pdf(inside), np.log(0.25), rtol=1e-14)
        self.assertTrue(np.all(np.isneginf(self.tent.log_pdf(outside))))
        self.assertAlmostEqual(self.tent.integral(), 1.0, places=14)

    def test_degenerate_triangle(self):
        """Teste: triângulo com área nula"""
        with self.assertRaises(DegenerateSupportError):
            TentDensity2D([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]], [0.0, 0.0, 0.0], [[0, 1, 2]])

    def test_asymmetric_bandwidth_matrix(self):
        """Teste: matriz de suavização não simétrica"""
        with self.assertRaises(InvalidInputError):
            SmoothedTent2D(self.tent, [[0.2, 0.1], [0.0, 0.2]])


class TestMixtureModel(unittest.TestCase):
    """Testes unitários para o modelo de mistura"""

    def setUp(self):
        self.alternative = SmoothedLogConcave(_density(), 0.3)

    def test_validation(self):
        """Teste: p0 fora de (0, 1), tau2 <= 0 e formas erradas"""
        for p0 in (0.0, 1.0, 1.2):
            with self.assertRaises(InvalidInputError):
                MixtureModel(p0, 0.0, 1.0, self.alternative)
        with self.assertRaises(InvalidInputError):
            MixtureModel(0.9, 0.0, 0.0, self.alternative)
        with self.assertRaises(InvalidInputError):
            MixtureModel(0.9, [0.0, 0.0], np.eye(2), self.alternative)

    def test_log_pdf_is_mixture(self):
        """Teste: log f = log(p0 f0 + (1 - p0) f1)"""
        model = MixtureModel(0.8, 0.2, 1.5, self.alternative)
        z = np.array([-2.0, 0.5, 2.0])
        expected = (0.8 * np.exp(model.null_log_pdf(z)) + 0.2 * self.alternative.pdf(z))

        np.testing.assert_allclose(np.exp(model.log_pdf(z)), expected, rtol=1e-13)

    def test_dict_round_trip(self):
        """Teste: from_dict(to_dict) reproduz as densidades"""
        model = MixtureModel(0.8, 0.2, 1.5, self.alternative)
        restored = MixtureModel.from_dict(model.to_dict())
        z = np.linspace(-3.0, 5.0, 17)

        np.testing.assert_array_equal(restored.log_pdf(z), model.log_pdf(z))
        self.assertEqual(restored.bandwidth(), 0.3)

    def test_unknown_alternative_type(self):
        """Teste: tipo de alternativa desconhecido"""
        data = MixtureModel(0.8, 0.2, 1.5, self.alternative).to_dict()
        data['alternative']['type'] = 'histogram'

        with self.assertRaises(InvalidInputError):
            MixtureModel.from_dict(data)

    def test_config_validation(self):
        """Teste: EmConfig com max_iterations < 1 ou rel_tol <= 0"""
        with self.assertRaises(InvalidInputError):
            EmConfig(max_iterations=0)
        with self.assertRaises(InvalidInputError):
            EmConfig(rel_tol=0.0)
        self.assertEqual(EmConfig().max_iterations, ModelConstants.EM_MAX_ITER)

    def test_trace_round_trip(self):
        """Teste: histórico do EM guardado e lido"""
        trace = EmTrace(converged=True, best_iteration=2)
        trace.append(EmIterationRecord(1, -10.0, 0.9, 0.1, 1.2, 0.3))
        trace.append(EmIterationRecord(2, -9.5, 0.88, 0.05, 1.1, 0.25, bandwidth_clipped=True))
        restored = EmTrace.from_dict(trace.to_dict())

        self.assertEqual(restored.iterations, 2)
        self.assertEqual(restored.best_log_likelihood, -9.5)
        self.assertTrue(restored.records[1].bandwidth_clipped)
        self.assertTrue(restored.converged)

    def test_artifact_round_trip(self):
        """Teste: FitArtifact.from_dict(to_dict) mantém o modelo"""
        model = MixtureModel(0.8, 0.2, 1.5, self.alternative)
        artifact = FitArtifact(model, EmTrace(), EmConfig(max_iterations=7), pvalue_input=True, source='x.csv')
        restored = FitArtifact.from_dict(artifact.to_dict())
        z = np.linspace(-3.0, 5.0, 9)

        np.testing.assert_allclose(restored.model.log_pdf(z), model.log_pdf(z), rtol=0.0, atol=1e-12)
        self.assertEqual(restored.config.max_iterations, 7)
        self.assertTrue(restored.pvalue_input)

    def test_artifact_format_version(self):
        """Teste: format_version desconhecida"""
        model = MixtureModel(0.8, 0.2, 1.5, self.alternative)
        data = FitArtifact(model, EmTrace(), EmConfig()).to_dict()
        data['format_version'] = 99

        with self.assertRaises(InvalidInputError):
            FitArtifact.from_dict(data)


class TestScenarios(unittest.TestCase):
    """Testes unitários para o registo de cenários"""

    def test_registry(self):
        """Teste: doze cenários com os p0 e alternativas esperados"""
        self.assertEqual(len(SCENARIOS), 12)
        self.assertEqual([get_scenario(f"U{i}").p0 for i in range(1, 7)],
                         [0.95, 0.90, 0.80, 0.95, 0.90, 0.80])
        self.assertEqual(get_scenario('U2').alt_shift.kind, 'normal')
        self.assertEqual(get_scenario('B5').alt_shift.kind, 'gamma')

    def test_gamma_shift_moments(self):
        """Teste: Gamma(12, 0.25) com média 3 e variância 0.75"""
        shift = get_scenario('U4').alt_shift

        self.assertAlmostEqual(shift.mean, 3.0, places=14)
        self.assertAlmostEqual(shift.variance, 0.75, places=14)

    def test_lookup_is_case_insensitive(self):
        """Teste: 'b3' e ' U1 ' encontram os cenários"""
        self.assertIs(get_scenario('b3'), SCENARIOS['B3'])
        self.assertIs(get_scenario(' U1 '), SCENARIOS['U1'])
        self.assertEqual(get_scenario('B6').paired_univariate_id, 'U6')

    def test_unknown(self):
        """Teste: identificador desconhecido"""
        with self.assertRaises(UnknownScenarioError):
            get_scenario('U7')


class TestMetricsReport(unittest.TestCase):
    """Testes unitários para os resumos do benchmark"""

    def test_mean_and_se(self):
        """Teste: média e erro padrão sd/√M"""
        mean, se = mean_and_se([1.0, 2.0, 3.0])

        self.assertAlmostEqual(mean, 2.0, places=15)
        self.assertAlmostEqual(se, 1.0 / np.sqrt(3.0), places=15)
        self.assertEqual(mean_and_se([4.0]), (4.0, 0.0))

    def test_five_number_summary(self):
        """Teste: quartis de 1..5"""
        self.assertEqual(five_number_summary([5, 1, 3, 2, 4]),
                         {'min': 1.0, 'q1': 2.0, 'median': 3.0, 'q3': 4.0, 'max': 5.0})

    def test_summaries_skip_failures(self):
        """Teste: resumos só com as réplicas concluídas"""
        runs = [RunMetrics(0, 11, 0.9, 0.05, [0.1], [0.2], 4, True),
                RunMetrics(2, 13, 0.8, 0.07, [0.3], [0.4], 6, False)]
        report = MetricsReport('U1', 100, 3, [0.2], 1, runs, failures=[(1, "RuntimeError: boom")])

        self.assertEqual(report.failure_count, 1)
        self.assertAlmostEqual(report.p0_summary()[0], 0.85, places=15)
        self.assertAlmostEqual(report.fnr_summary(0)[0], 0.3, places=15)
        self.assertEqual(report.threshold_index(0.2), 0)


class TestTables(unittest.TestCase):
    """Testes unitários para tabelas de entrada"""

    def test_label_column_is_not_data(self):
        """Teste: coluna 'label' excluída dos dados"""
        table = InputTable([[0.5, 0], [1.5, 1]], header=['z', 'label'])

        self.assertEqual(table.dimension, 1)
        np.testing.assert_array_equal(table.data, [0.5, 1.5])
        np.testing.assert_array_equal(table.labels, [0, 1])

    def test_pvalue_column(self):
        """Teste: cabeçalho 'pvalue' assinala p-values"""
        self.assertTrue(InputTable([[0.5], [0.1]], header=['PValue']).has_pvalue_column)
        self.assertFalse(InputTable([[0.5], [0.1]]).has_pvalue_column)

    def test_header_detection(self):
        """Teste: primeira linha não numérica é cabeçalho"""
        repository = TableRepository()
        with_header = repository.parse("z1,z2\n1,2\n3,4\n")
        without = repository.parse("1,2\n3,4\n")
        semicolon = repository.parse("1;2\n3;4\n", delimiter=';')

        self.assertEqual(with_header.header, ['z1', 'z2'])
        self.assertEqual(with_header.row_count, 2)
        self.assertIsNone(without.header)
        self.assertEqual(without.data.shape, (2, 2))
        np.testing.assert_array_equal(semicolon.data, without.data)

    def test_parse_errors(self):
        """Teste: célula inválida, colunas inconsistentes, tabela vazia e NaN"""
        repository = TableRepository()
        cases = [("1,2\n3\n", "line 2"), ("z\n1\nx\n", "line 3"), ("z\n", "no data"), ("1\nnan\n", "line 2")]
        for text, fragment in cases:
            with self.assertRaises(InputParseError) as ctx:
                repository.parse(text)
            self.assertIn(fragment, str(ctx.exception))

    def test_forced_header_flag(self):
        """Teste: header=False com texto na primeira linha"""
        with self.assertRaises(InputParseError) as ctx:
            TableRepository().parse("z\n1\n", header=False)

        self.assertEqual(ctx.exception.line_number, 1)

    def test_unknown_first_row_is_rejected(self):
        """Teste: primeira linha com nomes desconhecidos não é tomada por cabeçalho"""
        repository = TableRepository()
        for text in ("abc\n1\n2\n", "z,weight\n1,2\n"):
            with self.assertRaises(InputParseError) as ctx:
                repository.parse(text)
            self.assertEqual(ctx.exception.line_number, 1)

        self.assertEqual(repository.parse("Z,Label\n1,0\n").header, ['Z', 'Label'])

    def test_invalid_delimiter(self):
        """Teste: separador com mais de um carácter"""
        with self.assertRaises(InvalidInputError):
            TableRepository().parse("1\n2\n", delimiter='::')

    def test_format_cell(self):
        """Teste: booleanos, inteiros e floats com 17 algarismos"""
        self.assertEqual(format_cell(True), 'true')
        self.assertEqual(format_cell(np.bool_(False)), 'false')
        self.assertEqual(format_cell(np.int8(1)), '1')
        self.assertEqual(format_cell(0.1), '0.10000000000000001')
        self.assertEqual(float(format_cell(np.float64(1 / 3))), 1 / 3)


if __name__ == '__main__':
    unittest.main()
