# Noncommutative a.u.-counterexample laboratory
__version__ = "1.0.0"
