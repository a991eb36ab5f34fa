"""cfaudit: certainty-factor networks, influence diagrams and a modularity auditor."""

__version__ = "0.1.0"
