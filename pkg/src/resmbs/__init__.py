"""Supply-chain analytics for residential mortgage-backed securities.

Subpackages and modules:

- ``corpus``      document model, filtering, token weighting, annual slicing
- ``extraction``  dictionary NER, entity resolution, role pairing, agreement
- ``topics``      static and dynamic topic models over (role, institution) pairs
- ``performance`` shortfall/loss labeling (ME / NME / FE) and rate summaries
- ``features``    security / prospectus / topic feature tiers
- ``lasso``       L1-penalized logistic regression with grouped CV
- ``toxicity``    institution and community toxicity labeling
- ``synth``       seeded synthetic data generator with planted ground truth
- ``cli``         pipeline orchestration and report artifacts
"""

__version__ = "0.1.0"
