"""specshift: spectral shift functions, perturbation determinants, and
trace-formula verification for sectorial matrix calculus on dense complex
matrices."""

__version__ = "0.1.0"
