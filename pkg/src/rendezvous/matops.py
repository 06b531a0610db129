"""Dense small-matrix linear algebra.

Kronecker products, the matrix exponential, and solvers for the continuous
Lyapunov and algebraic Riccati equations. Matrices are plain 2-D float
``numpy`` arrays; :func:`as_matrix` is the single validation gate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Matrix equality convention used throughout the package.
ATOL = 1e-12
RTOL = 1e-10

CARE_TOL = 1e-10
CARE_MAX_ITER = 100


class NumericalError(RuntimeError):
    """Base class for numeric failures (non-convergence, instability, blow-up)."""


class NotHurwitzError(NumericalError):
    pass


class CareConvergenceError(NumericalError):
    pass


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    """Coerce ``m`` to a finite 2-D float array.

    Scalars become 1x1 and 1-D inputs become a single row.
    """
    arr = np.array(m, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(1, -1)
    elif arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name} must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def _square(m, name: str) -> np.ndarray:
    arr = as_matrix(m, name)
    if arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be square, got shape {arr.shape}")
    return arr


def allclose(x, y, atol: float = ATOL, rtol: float = RTOL) -> bool:
    return bool(np.allclose(x, y, atol=atol, rtol=rtol))


def kron(x, y) -> np.ndarray:
    """Kronecker product; block (i, j) of the result is ``x[i, j] * y``."""
    return np.kron(as_matrix(x, "x"), as_matrix(y, "y"))


# Degree-13 diagonal Pade coefficients and the matching 1-norm threshold
# (Higham 2005, "The scaling and squaring method for the matrix exponential
# revisited").
_PADE13 = (
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
)
_THETA13 = 5.371920351148152


def expm(m) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a [13/13] Pade approximant."""
    a = _square(m, "m")
    n = a.shape[0]
    norm = np.linalg.norm(a, 1)
    if norm == 0.0:
        return np.eye(n)
    s = 0
    if norm > _THETA13:
        s = int(np.ceil(np.log2(norm / _THETA13)))
        a = a / 2.0**s

    b = _PADE13
    ident = np.eye(n)
    a2 = a @ a
    a4 = a2 @ a2
    a6 = a4 @ a2
    u = a @ (a6 @ (b[13] * a6 + b[11] * a4 + b[9] * a2)
             + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident)
    v = (a6 @ (b[12] * a6 + b[10] * a4 + b[8] * a2)
         + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident)
    r = np.linalg.solve(v - u, v + u)
    for _ in range(s):
        r = r @ r
    return r


def is_hurwitz(a) -> bool:
    a = _square(a, "a")
    return bool(np.max(np.linalg.eigvals(a).real) < 0.0)


def solve_lyapunov(a, q) -> np.ndarray:
    """Solve ``a.T @ X + X @ a + q = 0`` for symmetric ``X``.

    Uses the vectorised (Kronecker) form, which is fine for the state
    dimensions used here (a handful of states). ``a`` must be Hurwitz.
    """
    a = _square(a, "a")
    q = _square(q, "q")
    n = a.shape[0]
    if q.shape != a.shape:
        raise ValueError(f"q shape {q.shape} does not match a shape {a.shape}")
    if not is_hurwitz(a):
        raise NotHurwitzError("lyapunov: a is not Hurwitz")
    ident = np.eye(n)
    # vec(a.T X + X a) = (I kron a.T + a.T kron I) vec(X) for row-major vec
    op = np.kron(a.T, ident) + np.kron(ident, a.T)
    try:
        x = np.linalg.solve(op, -q.reshape(-1)).reshape(n, n)
    except np.linalg.LinAlgError as exc:
        raise NotHurwitzError(f"lyapunov: singular system ({exc})") from exc
    return 0.5 * (x + x.T)


def care_residual(p, a, b, q, r) -> np.ndarray:
    """``P A + A^T P + Q - P B R^-1 B^T P``."""
    return p @ a + a.T @ p + q - p @ b @ np.linalg.solve(r, b.T @ p)


@dataclass(frozen=True)
class CareSolution:
    p: np.ndarray
    residual_norm: float
    iterations: int


def _initial_gain(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """A gain ``k0`` with ``a - b k0`` Hurwitz."""
    if is_hurwitz(a):
        return np.zeros((b.shape[1], a.shape[0]))
    k0 = b.T.copy()
    if is_hurwitz(a - b @ k0):
        return k0
    # Bass' method: shift past the spectrum and invert a controllability Gramian.
    beta = 1.0 + np.linalg.norm(a, 2)
    shifted = -(a + beta * np.eye(a.shape[0]))
    # W solves (a + beta I) W + W (a + beta I)^T = 2 b b^T
    w = solve_lyapunov(shifted.T, 2.0 * b @ b.T)
    try:
        return b.T @ np.linalg.inv(w)
    except np.linalg.LinAlgError as exc:
        raise CareConvergenceError("care: (a, b) not stabilizable") from exc


def solve_care(a, b, q, r, tol: float = CARE_TOL,
               max_iter: int = CARE_MAX_ITER) -> CareSolution:
    """Stabilising solution of the continuous algebraic Riccati equation.

    Kleinman-Newton iteration: each step solves a Lyapunov equation for the
    closed loop of the current gain, then updates the gain from the new
    solution. Stops once ``||residual|| <= tol * (1 + ||P||)``.

    Raises
    ------
    ValueError
        On inconsistent shapes or ``r`` not symmetric positive definite.
    CareConvergenceError
        If the tolerance is not met within ``max_iter`` iterations.
    """
    a = _square(a, "a")
    q = _square(q, "q")
    r = _square(r, "r")
    b = as_matrix(b, "b")
    m = a.shape[0]
    if b.shape[0] != m or q.shape != (m, m) or r.shape != (b.shape[1],) * 2:
        raise ValueError(
            f"care: inconsistent shapes a{a.shape} b{b.shape} q{q.shape} r{r.shape}")
    if not allclose(r, r.T):
        raise ValueError("care: r is not symmetric")
    try:
        np.linalg.cholesky(r)
    except np.linalg.LinAlgError as exc:
        raise ValueError("care: r is not positive definite") from exc

    k = _initial_gain(a, b)
    p = np.zeros_like(a)
    res = np.inf
    for it in range(1, max_iter + 1):
        closed = a - b @ k
        try:
            p = solve_lyapunov(closed, q + k.T @ r @ k)
        except NotHurwitzError as exc:
            raise CareConvergenceError(f"care: iterate {it} lost stability") from exc
        k = np.linalg.solve(r, b.T @ p)
        res = float(np.linalg.norm(care_residual(p, a, b, q, r)))
        if res <= tol * (1.0 + np.linalg.norm(p)):
            # Newton converges quadratically here: one more step usually
            # reaches roundoff level, so keep it whenever it helps.
            try:
                p2 = solve_lyapunov(a - b @ k, q + k.T @ r @ k)
            except NotHurwitzError:
                p2 = None
            if p2 is not None:
                res2 = float(np.linalg.norm(care_residual(p2, a, b, q, r)))
                if res2 < res:
                    p, res, it = p2, res2, it + 1
            return CareSolution(p=p, residual_norm=res, iterations=it)
    raise CareConvergenceError(
        f"care: residual {res:.3e} above tolerance after {max_iter} iterations")
