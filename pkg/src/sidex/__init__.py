"""Error exponents for source coding with side information.

Discrete theory lives in :mod:`sidex.sccsi` (coded side information) and
:mod:`sidex.wz` (Wyner-Ziv); :mod:`sidex.erasure` and :mod:`sidex.gaussian`
hold the worked examples, :mod:`sidex.simulator` the Monte Carlo codes and
:mod:`sidex.cli` the command-line tool.
"""

__version__ = "0.1.0"
