"""Scalar re-typings of the benchmark formulas, written with ``math`` and
plain loops so they share no code with the vectorized catalog."""
import math

import mpmath

A3 = [[3.0, 10, 30], [0.1, 10, 35], [3.0, 10, 30], [0.1, 10, 35]]
P3 = [[0.3689, 0.1170, 0.2673], [0.4699, 0.4387, 0.7470], [0.1091, 0.8732, 0.5547], [0.0381, 0.5743, 0.8828]]
A6 = [[10, 3, 17, 3.50, 1.7, 8], [0.05, 10, 17, 0.1, 8, 14], [3, 3.5, 1.7, 10, 17, 8], [17, 8, 0.05, 10, 0.1, 14]]
P6 = [
    [0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886],
    [0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991],
    [0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650],
    [0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381],
]
ALPHA = [1.0, 1.2, 3.0, 3.2]


def eggholder(x):
    a = x[1] + 47
    return -a * math.sin(math.sqrt(abs(a + x[0] / 2))) - x[0] * math.sin(math.sqrt(abs(x[0] - a)))


def camel3(x):
    return 2 * x[0] ** 2 - 1.05 * x[0] ** 4 + x[0] ** 6 / 6 + x[0] * x[1] + x[1] ** 2


def camel6(x):
    a, b = x
    return (4 - 2.1 * a * a + a ** 4 / 3) * a * a + a * b + (-4 + 4 * b * b) * b * b


def _hartmann(x, A, P):
    total = 0.0
    for i in range(4):
        s = 0.0
        for j in range(len(x)):
            s += A[i][j] * (x[j] - P[i][j]) ** 2
        total += ALPHA[i] * math.exp(-s)
    return total


def hartmann3(x):
    return -_hartmann(x, A3, P3)


def hartmann4(x):
    return (1.1 - _hartmann(x, A6, P6)) / 0.839


def hartmann6(x):
    return -_hartmann(x, A6, P6)


def ackley(x):
    d = len(x)
    s1 = sum(v * v for v in x) / d
    s2 = sum(math.cos(2 * math.pi * v) for v in x) / d
    return -20 * math.exp(-0.2 * math.sqrt(s1)) - math.exp(s2) + 20 + math.e


def michalewicz(x):
    return -sum(math.sin(v) * math.sin((i + 1) * v * v / math.pi) ** 20 for i, v in enumerate(x))


def perm0db(x, beta=0.5):
    """Exact to 60 digits, returned as an mpmath number (may exceed doubles)."""
    with mpmath.workdps(60):
        xs = [mpmath.mpf(v) for v in x]
        total = mpmath.mpf(0)
        d = len(xs)
        for i in range(1, d + 1):
            inner = mpmath.mpf(0)
            for j in range(1, d + 1):
                inner += (j + beta) * (xs[j - 1] ** i - mpmath.mpf(1) / mpmath.mpf(j) ** i)
            total += inner ** 2
        return +total


def rosenbrock(x):
    return sum(100 * (x[i + 1] - x[i] ** 2) ** 2 + (x[i] - 1) ** 2 for i in range(len(x) - 1))


def dixon_price(x):
    return (x[0] - 1) ** 2 + sum(i * (2 * x[i - 1] ** 2 - x[i - 2]) ** 2 for i in range(2, len(x) + 1))


def trid(x):
    return sum((v - 1) ** 2 for v in x) - sum(x[i] * x[i - 1] for i in range(1, len(x)))


def sumsqu(x):
    return sum((i + 1) * v * v for i, v in enumerate(x))


def sumpow(x):
    return sum(abs(v) ** (i + 2) for i, v in enumerate(x))


def spheref(x):
    return sum(v * v for v in x)


def rothyp(x):
    return sum(sum(x[j] ** 2 for j in range(i + 1)) for i in range(len(x)))


ORACLES = {
    "eggholder": eggholder, "camel3": camel3, "camel6": camel6, "hartmann3": hartmann3,
    "hartmann4": hartmann4, "ackley": ackley, "hartmann6": hartmann6, "michalewicz": michalewicz,
    "rosenbrock": rosenbrock, "dixon-price": dixon_price, "trid": trid, "sumsqu": sumsqu,
    "sumpow": sumpow, "spheref": spheref, "rothyp": rothyp, "perm0db": perm0db,
}

# optima as printed in the catalog reference, not read from the package
LISTED_OPTIMA = {
    "eggholder": (-959.6407, (512, 404.2319)),
    "camel3": (0.0, (0, 0)),
    "camel6": (-1.0316, (-0.0898, 0.7126)),
    "hartmann3": (-3.86278, (0.114614, 0.555649, 0.852547)),
    "ackley": (0.0, (0,) * 5),
    "hartmann6": (-3.32237, (0.20169, 0.150011, 0.476874, 0.275332, 0.311652, 0.6573)),
    "rosenbrock": (0.0, (1,) * 20),
    "dixon-price": (0.0, tuple(2 ** (-(2 ** i - 2) / 2 ** i) for i in range(1, 26))),
    "trid": (-4930.0, tuple(i * (31 - i) for i in range(1, 31))),
    "sumsqu": (0.0, (0,) * 40),
    "sumpow": (0.0, (0,) * 50),
    "spheref": (0.0, (0,) * 60),
    "rothyp": (0.0, (0,) * 70),
    "perm0db": (0.0, tuple(1 / j for j in range(1, 81))),
}


def oracle_value(name, x):
    """Oracle as a float, saturating at the largest double like the catalog."""
    value = ORACLES[name](list(map(float, x)))
    if name == "perm0db":
        return float(value) if value <= mpmath.mpf(1.7976931348623157e308) else 1.7976931348623157e308
    return value


def relative_error(got, expected):
    return abs(got - expected) / max(abs(expected), 1e-300) if expected != 0 else abs(got)
