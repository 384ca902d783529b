"""Fixed polynomial corpus shared by the lowering and gadget tests.

At most three variables, total degree at most 4, coefficients in [-10, 10],
and every variable occurs.
"""

LOWERING_CORPUS = [
    "x1 - 2",
    "x1^2 - 4",
    "x1^2 - 4*x1 + 4",
    "x1*x2 - 6",
    "x1 + x2 - 3",
    "x1^2 + x2^2 - 5",
    "x1^2 - x2",
    "x1^3 - x2^2",
    "2*x1 - 3*x2 + 1",
    "x1^2*x2 - 4",
    "x1*x2*x3 - 2",
    "x1 + x2 + x3",
    "x1^2 + x2^2 - x3^2",
    "x1^4 - 10*x2 + 9",
    "x1^2 - 2",
    "x1*x2 + x3 - 7",
    "3*x1^2 - 5*x2 + x3 - 1",
    "x1^2*x2^2 - 4",
    "x1 - x2",
    "x1^2 + 1",
    "x1*x1 - x2*x3",
    "10*x1 - 10",
    "x1^3 - 7*x1 + 6",
    "x1^2 + x2^2 + x3^2 - 3",
]

# equations whose zero set is finite, non-empty and box-stable
GADGET_CORPUS = [
    "x1 - 2",
    "x1^2 - 4",
    "x1^2 + x2^2 - 5",
    "x1*x2 - 6",
    "x1^3 - 7*x1 + 6",
]
