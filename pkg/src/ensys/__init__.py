"""Construct, lower, solve and census E_n constraint systems."""

from .polynomial import Polynomial, degree_in, evaluate, lemma1_gadget, parse_polynomial
from .system import Constraint, EnSystem, canonical_form, parse_system, serialize_system, validate
from .solver import (
    Box,
    Budget,
    Domain,
    Finite,
    Infinite,
    Undetermined,
    classify_finiteness,
    count_solutions,
    enumerate_solutions,
    propagate_ground,
)

__version__ = "0.1.0"
