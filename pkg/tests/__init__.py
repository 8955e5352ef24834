"""
Tests package for fdrmix
"""

import os
import sys
import unittest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))


class TestConfig:
    """Configuração para testes"""
    VERBOSE = True
    SHOW_WARNINGS = False
    SLOW_FLAG = 'FDRMIX_SLOW_TESTS'


def run_all_tests(include_slow: bool = False, pattern: str = 'test_*.py') -> bool:
    """
    Executa todos os testes do package

    Args:
        include_slow: Activa FDRMIX_SLOW_TESTS (Monte Carlo M=50, ajustes bivariados grandes)
        pattern: Padrão dos módulos a descobrir (ex: 'test_tent_*.py')

    Returns:
        bool: True se todos os testes passaram, False caso contrário
    """
    if include_slow:
        os.environ[TestConfig.SLOW_FLAG] = '1'

    loader = unittest.TestLoader()
    suite = loader.discover(os.path.dirname(__file__), pattern=pattern)

    runner = unittest.TextTestRunner(
        verbosity=2 if TestConfig.VERBOSE else 1,
        warnings='ignore' if not TestConfig.SHOW_WARNINGS else None
    )
    result = runner.run(suite)

    if result.skipped:
        print(f"⏭️  {len(result.skipped)} tests skipped (slow ones need {TestConfig.SLOW_FLAG}=1 to run them)")
    return result.wasSuccessful()


if __name__ == '__main__':
    slow = '--slow' in sys.argv[1:]
    print(f"🧪 Running all tests for fdrmix{' (including slow tests)' if slow else ''}")
    print("=" * 60)

    if run_all_tests(include_slow=slow):
        print("\n✅ All tests passed!")
        sys.exit(0)
    print("\n❌ Some tests failed!")
    sys.exit(1)
