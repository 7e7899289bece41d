"""Satisfiability certificates by induction for quantified formulas over
linear integer arithmetic with unary uninterpreted functions."""

__version__ = "0.1.0"
