"""Chain-referral sampling of two-category social networks: samplers,
inclusion-probability models, weighted estimators, bootstrap intervals and
a Monte-Carlo experiment harness."""

__version__ = "0.1.0"
