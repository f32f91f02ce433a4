""" cfamc Tests

Runs every test module and prints one summary per module.

    $ python -m tests.run_all

"""

import sys
import unittest

from cfamc.utils.logger import logger

from tests import test_signal as SignalTests
from tests import test_dataset as DatasetTests
from tests import test_model as ModelTests
from tests import test_training as TrainingTests
from tests import test_flops as FlopsTests
from tests import test_eval as EvalTests
from tests import test_cli as CliTests

all_tests = [
             SignalTests,
             DatasetTests,
             ModelTests,
             TrainingTests,
             FlopsTests,
             EvalTests,
             CliTests,
             ]


def run(verbosity=2):
    logger.disable()
    results = []
    for module in all_tests:
        testsuite = unittest.TestLoader().loadTestsFromModule(module)
        test_result = unittest.TextTestRunner(verbosity=verbosity, buffer=True).run(testsuite)
        results.append((module, test_result))

    for module, test_result in results:
        print('===========================')
        print(module.__name__)
        print('Success: {}'.format(test_result.wasSuccessful()))
        print('Ran: {}'.format(test_result.testsRun))
        print('Failed: {}'.format(len(test_result.failures)))
        print('Errors: {}'.format(len(test_result.errors)))
        print('Skipped: {}'.format(len(test_result.skipped)))

    print('===========================')
    passed = all(r.wasSuccessful() for _, r in results)
    if passed:
        print('All Tests Passed: {}'.format(sum(r.testsRun for _, r in results)))
    else:
        print('FAILED')
    print('===========================')
    return passed


if __name__ == '__main__':
    sys.exit(0 if run() else 1)
