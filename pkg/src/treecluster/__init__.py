"""Deterministic generation of photonic tree cluster states from a single emitter.

Modules: ``stabilizer`` (tableau simulator and graph rules), ``protocol``
(emission sequences), ``noisy_sim`` (density matrices with pulse errors),
``loss_analysis`` (error budgets and Monte-Carlo decoders), ``gate_physics``
(finite-bandwidth gate errors), ``optimizer`` (shape search) and ``cli``.
"""

__version__ = "0.1.0"
