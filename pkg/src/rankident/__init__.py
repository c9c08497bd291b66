"""Exact certification of generic identifiability for two-component ranking mixtures.

Sub-modules: :mod:`~rankident.polyarith` (rational polynomials),
:mod:`~rankident.groebner` (Buchberger, Bad sets), :mod:`~rankident.modular`
(finite-field engine and verified lift), :mod:`~rankident.variety`
(dimension, degree, numeric solving), :mod:`~rankident.models` (BTL, MNL and
Plackett–Luce mixture systems), :mod:`~rankident.certify` and
:mod:`~rankident.dsl` / :mod:`~rankident.cli` (text format and command line).
"""

__version__ = "0.1.0"
