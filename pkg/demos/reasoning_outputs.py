"""
Reasoning outputs under two parser modes
----------------------------------------

Every completion opens with a think block. The strict parser rejects them
all; the deployment-aware parser strips the block and scores the call.
"""

from callforge import fixtures
from callforge.call_parser import DEPLOYMENT_AWARE, STRICT
from callforge.evaluator import evaluate, render_report

samples, offered, outputs = fixtures.think_fixture(seed=0)

for mode in (STRICT, DEPLOYMENT_AWARE):
    _, _, report = evaluate(samples, offered, outputs, mode)
    print(mode, "parse failures:", report.parse_failure_rate, "name accuracy:", round(report.function_name_accuracy, 3))

print(render_report(report, "markdown"))

samples, offered, outputs = fixtures.error_mix_fixture(seed=0)
_, _, report = evaluate(samples, offered, outputs, STRICT)
print(report.error_distribution)
