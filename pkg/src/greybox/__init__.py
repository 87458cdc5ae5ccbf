"""greybox: structured intake, algorithm recommendation, and experiment
planning for optimization projects.

The package turns the opening meetings of an optimization project into
structured artifacts: a checklist-driven session produces a problem spec
with classified constraints, a rule table maps the spec's features to
ranked algorithm families, a small continuous-optimization core measures
how simplex initialization and search-space normalization behave, and an
experiment module plans factorial studies and renders structured reports.
"""

__version__ = "0.1.0"

from . import checklist, contopt, experiment, problem, qrak, recommend

__all__ = ["checklist", "contopt", "experiment", "problem", "qrak", "recommend", "__version__"]
