"""State-space LTI systems: interconnection algebra, realisations and norms."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla
from scipy import optimize, signal


class NotHurwitz(ValueError):
    pass


def _m(x, rows=None, cols=None) -> np.ndarray:
    a = np.atleast_2d(np.asarray(x, dtype=float))
    if a.size == 0:
        a = np.zeros((rows or 0, cols or 0))
    return a


@dataclass(frozen=True)
class LtiSystem:
    """x' = A x + B u, y = C x + D u.  Zero-state systems are static gains."""
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray = None

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        A = np.zeros((0, 0)) if A.size == 0 else np.atleast_2d(A)
        n = A.shape[0]
        B = np.asarray(self.B, dtype=float)
        C = np.asarray(self.C, dtype=float)
        if n:
            B = np.atleast_2d(B).reshape(n, -1)
            C = np.atleast_2d(C).reshape(-1, n)
            m, p = B.shape[1], C.shape[0]
        else:
            m = B.shape[-1] if B.ndim == 2 else 0
            p = C.shape[0] if C.ndim == 2 else 0
        if self.D is None:
            D = np.zeros((p, m))
        else:
            D = np.atleast_2d(np.asarray(self.D, dtype=float))
        if n == 0:
            p, m = D.shape
            B, C = np.zeros((0, m)), np.zeros((p, 0))
        if A.shape != (n, n) or D.shape != (p, m) or B.shape != (n, m) or C.shape != (p, n):
            raise ValueError(f"inconsistent dimensions A{A.shape} B{B.shape} C{C.shape} D{D.shape}")
        for name, val in (("A", A), ("B", B), ("C", C), ("D", D)):
            object.__setattr__(self, name, val)

    # -- shape ---------------------------------------------------------------
    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.D.shape[1]

    @property
    def p(self) -> int:
        return self.D.shape[0]

    @classmethod
    def gain(cls, K) -> "LtiSystem":
        K = np.atleast_2d(np.asarray(K, dtype=float))
        return cls(np.zeros((0, 0)), np.zeros((0, K.shape[1])), np.zeros((K.shape[0], 0)), K)

    @classmethod
    def from_tf(cls, num, den) -> "LtiSystem":
        A, B, C, D = signal.tf2ss(num, den)
        return cls(A, B, C, D)

    @classmethod
    def diag_tf(cls, entries) -> "LtiSystem":
        """Block-diagonal system from a list of SISO (num, den) pairs."""
        return block_diag(*[cls.from_tf(n, d) for n, d in entries])

    # -- algebra -------------------------------------------------------------
    def __matmul__(self, other):
        return series(self, other)

    def __mul__(self, other):
        if isinstance(other, LtiSystem):
            return series(self, other)
        return LtiSystem(self.A, self.B, self.C * other, self.D * other)

    __rmul__ = __mul__

    def __add__(self, other):
        return parallel(self, other)

    def __sub__(self, other):
        return parallel(self, -other)

    def __neg__(self):
        return LtiSystem(self.A, self.B, -self.C, -self.D)

    def premul(self, K) -> "LtiSystem":
        K = np.atleast_2d(K)
        return LtiSystem(self.A, self.B, K @ self.C, K @ self.D)

    def postmul(self, K) -> "LtiSystem":
        K = np.atleast_2d(K)
        return LtiSystem(self.A, self.B @ K, self.C, self.D @ K)

    def inverse(self) -> "LtiSystem":
        if self.p != self.m:
            raise ValueError("only square systems can be inverted")
        Di = np.linalg.inv(self.D)
        return LtiSystem(self.A - self.B @ Di @ self.C, self.B @ Di, -Di @ self.C, Di)

    def times_s(self, shift: float = 0.0) -> "LtiSystem":
        """(s + shift) * G(s); requires G strictly proper so the result is proper."""
        if np.any(self.D != 0):
            raise ValueError("multiplying a system with feedthrough by s is improper")
        return LtiSystem(self.A, self.B, self.C @ self.A + shift * self.C, self.C @ self.B)

    # -- evaluation ----------------------------------------------------------
    def poles(self) -> np.ndarray:
        return np.linalg.eigvals(self.A) if self.n else np.zeros(0)

    def is_stable(self, margin: float = 0.0) -> bool:
        return bool(np.all(self.poles().real < -margin))

    def freqresp(self, s) -> np.ndarray:
        s = complex(s)
        if self.n == 0:
            return self.D.astype(complex)
        return self.C @ np.linalg.solve(s * np.eye(self.n) - self.A, self.B) + self.D

    def dcgain(self) -> np.ndarray:
        return np.real(self.freqresp(0.0))

    def relative_degree_ok(self) -> bool:
        return bool(np.all(self.D == 0))

    def minreal(self, tol: float = 1e-10) -> "LtiSystem":
        return staircase_minreal(self, tol)


def series(g2: LtiSystem, g1: LtiSystem) -> LtiSystem:
    """g2 * g1: the output of g1 drives g2."""
    if g2.m != g1.p:
        raise ValueError(f"cannot cascade {g1.p}-output into {g2.m}-input system")
    n1, n2 = g1.n, g2.n
    A = np.block([[g1.A, np.zeros((n1, n2))], [g2.B @ g1.C, g2.A]])
    B = np.vstack((g1.B, g2.B @ g1.D))
    C = np.hstack((g2.D @ g1.C, g2.C))
    return LtiSystem(A if A.size else np.zeros((0, 0)), B, C, g2.D @ g1.D)


def parallel(g1: LtiSystem, g2: LtiSystem) -> LtiSystem:
    if (g1.p, g1.m) != (g2.p, g2.m):
        raise ValueError("parallel connection needs equal shapes")
    A = sla.block_diag(g1.A, g2.A) if g1.n + g2.n else np.zeros((0, 0))
    return LtiSystem(A, np.vstack((g1.B, g2.B)), np.hstack((g1.C, g2.C)), g1.D + g2.D)


def block_diag(*systems: LtiSystem) -> LtiSystem:
    A = sla.block_diag(*[s.A for s in systems])
    B = sla.block_diag(*[s.B for s in systems])
    C = sla.block_diag(*[s.C for s in systems])
    D = sla.block_diag(*[s.D for s in systems])
    n = sum(s.n for s in systems)
    return LtiSystem(A.reshape(n, n), B.reshape(n, -1), C.reshape(-1, n), D)


def identity(k: int) -> LtiSystem:
    return LtiSystem.gain(np.eye(k))


def _controllable_part(A, B, C, tol):
    n = A.shape[0]
    scale = max(np.linalg.norm(A), np.linalg.norm(B), 1.0)
    nc = 0
    blk = B
    while nc < n:
        if blk.size == 0:
            break
        U, s, _ = np.linalg.svd(blk)
        r = int(np.sum(s > tol * scale))
        if r == 0:
            break
        Q = np.eye(n)
        Q[nc:, nc:] = U
        A, B, C = Q.T @ A @ Q, Q.T @ B, C @ Q
        blk = A[nc + r:, nc:nc + r]
        nc += r
    return A[:nc, :nc], B[:nc], C[:, :nc]


def staircase_minreal(sys: LtiSystem, tol: float = 1e-10) -> LtiSystem:
    """Remove uncontrollable then unobservable modes with orthogonal staircase reductions."""
    if sys.n == 0:
        return sys
    A, B, C = _controllable_part(sys.A, sys.B, sys.C, tol)
    if A.shape[0]:
        At, Ct, Bt = _controllable_part(A.T, C.T, B.T, tol)
        A, B, C = At.T, Bt.T, Ct.T
    if A.shape[0] == 0:
        return LtiSystem.gain(sys.D)
    return LtiSystem(A, B, C, sys.D)


def _psd_sqrt_factor(W: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(0.5 * (W + W.T))
    return V * np.sqrt(np.clip(w, 0.0, None))


def balanced_minreal(sys: LtiSystem, tol: float = 1e-7) -> LtiSystem:
    """Square-root balanced truncation dropping Hankel values below ``tol * max``.

    Exact for removing uncontrollable or unobservable modes of a stable
    system; requires a Hurwitz A.
    """
    if sys.n == 0:
        return sys
    if not sys.is_stable():
        raise NotHurwitz("minimal realisation here is defined for stable systems")
    Wc = sla.solve_continuous_lyapunov(sys.A, -sys.B @ sys.B.T)
    Wo = sla.solve_continuous_lyapunov(sys.A.T, -sys.C.T @ sys.C)
    Lc, Lo = _psd_sqrt_factor(Wc), _psd_sqrt_factor(Wo)
    U, hsv, Vt = np.linalg.svd(Lo.T @ Lc)
    if hsv.size == 0 or hsv[0] == 0:
        return LtiSystem.gain(sys.D)
    r = int(np.sum(hsv > tol * hsv[0]))
    S = np.diag(hsv[:r] ** -0.5)
    T = Lc @ Vt[:r].T @ S
    Ti = S @ U[:, :r].T @ Lo.T
    return LtiSystem(Ti @ sys.A @ T, Ti @ sys.B, sys.C @ T, sys.D)


def expm_integral(A: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    """(e^{A h}, int_0^h e^{A s} ds) from one augmented exponential."""
    n = A.shape[0]
    aug = np.zeros((2 * n, 2 * n))
    aug[:n, :n] = A
    aug[:n, n:] = np.eye(n)
    E = sla.expm(aug * h)
    return E[:n, :n], E[:n, n:]


def zoh(A: np.ndarray, B: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    Ad, G = expm_integral(A, h)
    return Ad, G @ B


def _tail_gramians(A, C, beta):
    Ab = A + beta * np.eye(A.shape[0])
    return [sla.solve_continuous_lyapunov(Ab.T, -np.outer(c, c)) for c in C]


def l1_norm_entries(sys: LtiSystem, horizon_tol: float = 1e-9, growth: float = 0.05,
                    max_time: float | None = None) -> np.ndarray:
    """Entry-wise L1 norms of the impulse-response matrix (feedthrough included).

    Each interval of a log-graded time grid is integrated exactly through the
    augmented matrix exponential; intervals where an entry changes sign are
    split at the root.  Integration stops once a Gramian bound on the
    remaining tail of every entry is below ``horizon_tol``.
    """
    out = np.abs(sys.D).astype(float)
    if sys.n == 0:
        return out
    A, B, C = sys.A, sys.B, sys.C
    lam = np.linalg.eigvals(A)
    if np.any(lam.real >= 0):
        raise NotHurwitz(f"unstable or marginal poles: {lam[lam.real >= 0]}")
    slow = float(np.min(-lam.real))
    fast = float(np.max(np.abs(lam)))
    beta = 0.5 * slow
    gram = _tail_gramians(A, C, beta)
    osc = float(np.max(np.abs(lam.imag)))
    h_cap = math.pi / (4.0 * osc) if osc > 0 else math.inf
    h = min(0.02 / fast, h_cap)
    if max_time is None:
        max_time = 200.0 / slow + 1e3 / fast
    cache: dict[float, tuple[np.ndarray, np.ndarray]] = {}

    def step_mats(hh):
        if hh not in cache:
            cache[hh] = expm_integral(A, hh)
        return cache[hh]

    X = B.copy()
    G0 = C @ X
    t = 0.0
    block = 0
    p, m = C.shape[0], B.shape[1]
    while True:
        Phi, Gam = step_mats(h)
        Xn = Phi @ X
        G1 = C @ Xn
        I_all = C @ (Gam @ X)
        flip = (G0 * G1) < 0
        if flip.any():
            for i, j in zip(*np.nonzero(flip)):
                out[i, j] += _split_interval(A, C[i], X[:, j], h, G0[i, j], G1[i, j],
                                             I_all[i, j])
            I_all = np.where(flip, 0.0, I_all)
        out += np.abs(I_all)
        X, G0 = Xn, G1
        t += h
        block += 1
        if block % 32 == 0:
            tails = np.array([[math.sqrt(max(X[:, j] @ gram[i] @ X[:, j], 0.0) / (2 * beta))
                               for j in range(m)] for i in range(p)])
            if np.all(tails < horizon_tol) or t > max_time:
                out += np.abs(C @ np.linalg.solve(-A, X))
                return out
            if 2 * h <= h_cap and h < growth * t:
                h *= 2.0


def _split_interval(A, c, x, h, g0, g1, total):
    def g(tau):
        if tau <= 0.0:
            return g0
        if tau >= h:
            return g1
        return float(c @ (sla.expm(A * tau) @ x))
    root = optimize.brentq(g, 0.0, h, xtol=1e-14 * max(h, 1.0), rtol=1e-15)
    _, Gam = expm_integral(A, root)
    first = float(c @ (Gam @ x))
    return abs(first) + abs(total - first)


def l1_norm(sys: LtiSystem, horizon_tol: float = 1e-9) -> float:
    """Induced L-infinity gain: max row sum of the entry-wise L1 norms."""
    return float(np.max(np.sum(l1_norm_entries(sys, horizon_tol), axis=1)))


def inf_norm(K) -> float:
    """Induced infinity-norm of a matrix (max absolute row sum)."""
    K = np.atleast_2d(np.asarray(K, dtype=float))
    return float(np.max(np.sum(np.abs(K), axis=1))) if K.size else 0.0
