"""Multi-label classification of Spanish legal judgements with decision-path
explanations: rule-based entity extraction, anonymisation, n-gram features,
binary/multi-class transformation strategies over tree ensembles, and
natural-language plus graph explanations."""

__version__ = "0.1.0"
