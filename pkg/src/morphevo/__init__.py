"""Co-optimization of modular-robot morphologies and sine-wave controllers.

An outer evolutionary loop searches over tree-encoded robot bodies while an
inner Bayesian-optimization loop tunes each body's joint controllers, all on
a deterministic kinematic locomotion proxy.
"""

__version__ = "0.1.0"
