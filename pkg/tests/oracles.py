"""Independent reference computations used to freeze and cross-check values."""

import math


def solve_normal_equations(X, y):
    """Gauss-Jordan elimination with partial pivoting on X'X b = X'y, in pure Python."""
    n, k = len(X), len(X[0])
    A = [[sum(X[r][a] * X[r][b] for r in range(n)) for b in range(k)] for a in range(k)]
    rhs = [sum(X[r][a] * y[r] for r in range(n)) for a in range(k)]
    M = [row + [v] for row, v in zip(A, rhs)]
    for col in range(k):
        piv = max(range(col, k), key=lambda r: abs(M[r][col]))
        M[col], M[piv] = M[piv], M[col]
        p = M[col][col]
        M[col] = [v / p for v in M[col]]
        for r in range(k):
            if r != col and M[r][col] != 0:
                f = M[r][col]
                M[r] = [a - f * b for a, b in zip(M[r], M[col])]
    return [M[r][k] for r in range(k)]


def pearson_direct(xs, ys):
    n = len(xs)
    mx, my = sum(xs) / n, sum(ys) / n
    cov = sum((x - mx) * (y - my) for x, y in zip(xs, ys)) / n
    sx = math.sqrt(sum((x - mx) ** 2 for x in xs) / n)
    sy = math.sqrt(sum((y - my) ** 2 for y in ys) / n)
    return cov / (sx * sy)
