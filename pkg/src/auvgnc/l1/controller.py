"""Sampled-data L1 augmentation: adaptation law, output predictor, control law."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla

from ..lti import LtiSystem, NotHurwitz, expm_integral, identity


class SingularLambda(np.linalg.LinAlgError):
    pass


class SingularPhi(np.linalg.LinAlgError):
    pass


class NonSPDQ(ValueError):
    pass


class NonProperFilter(ValueError):
    pass


class NonMinimumPhaseM(ValueError):
    pass


class UnstableFilter(ValueError):
    pass


@dataclass(frozen=True)
class DesiredSystem:
    """Desired rate dynamics M(s) and the DC-normalising feedforward gain."""
    sys: LtiSystem

    def __post_init__(self):
        s = self.sys
        if s.p != 2 or s.m != 2:
            raise ValueError("desired system must map 2 commands to 2 rates")
        if not s.is_stable():
            raise NotHurwitz("A_m must be Hurwitz")
        if abs(np.linalg.det(s.C @ s.B)) < 1e-12:
            raise ValueError("C_m B_m must be nonsingular")
        if np.any(s.D != 0):
            raise ValueError("M(s) must be strictly proper")

    @property
    def K_g(self) -> np.ndarray:
        s = self.sys
        return -np.linalg.inv(s.C @ np.linalg.solve(s.A, s.B))

    @property
    def C_pinv(self) -> np.ndarray:
        C = self.sys.C
        return C.T @ np.linalg.inv(C @ C.T)

    def inverse_factor(self, shift: float = 1.0) -> LtiSystem:
        """W with M^{-1}(s) = W(s) (s + shift); W is proper and stable for minimum-phase M."""
        A, B, C = self.sys.A, self.sys.B, self.sys.C
        CBi = np.linalg.inv(C @ B)
        CAs = C @ (A + shift * np.eye(A.shape[0]))
        return LtiSystem(A - B @ CBi @ CAs, B @ CBi, -CBi @ CAs, CBi)

    def zeros_stable(self) -> bool:
        W = self.inverse_factor(1.0)
        return W.is_stable()

    @classmethod
    def nominal(cls) -> "DesiredSystem":
        return cls(LtiSystem(-0.1 * np.eye(2), 0.1 * np.eye(2), np.eye(2)))


def nominal_filter() -> LtiSystem:
    """C(s) = diag(0.1/((s+1)^2 (s+0.1)), 0.01^3/(s+0.01)^3)."""
    return LtiSystem.diag_tf([
        ([0.1], np.polymul(np.polymul([1, 1], [1, 1]), [1, 0.1])),
        ([0.01 ** 3], np.polymul(np.polymul([1, 0.01], [1, 0.01]), [1, 0.01])),
    ])


@dataclass(frozen=True)
class L1Gains:
    Ts: float
    P: np.ndarray
    Q: np.ndarray
    sqrtP: np.ndarray
    D: np.ndarray
    Lambda: np.ndarray
    Phi: np.ndarray
    exp_term: np.ndarray            # e^{Lambda A_m Lambda^-1 Ts}
    adapt_gain: np.ndarray          # -Phi^-1 exp_term 1_{nm,2}
    eAm: np.ndarray                 # e^{A_m Ts}
    pred_in: np.ndarray             # A_m^-1 (e^{A_m Ts} - I)
    eAm_neg: np.ndarray             # e^{-A_m Ts}
    K_g: np.ndarray
    C_m: np.ndarray
    B_m: np.ndarray
    C_pinv: np.ndarray

    @property
    def n_m(self) -> int:
        return self.P.shape[0]


def _nullspace_rows(M: np.ndarray) -> np.ndarray:
    N = sla.null_space(M).T
    for row in N:
        k = int(np.argmax(np.abs(row)))
        if row[k] < 0:
            row *= -1.0
    return N


def build_gains(desired: DesiredSystem, Q, Ts: float) -> L1Gains:
    A, B, C = desired.sys.A, desired.sys.B, desired.sys.C
    n = A.shape[0]
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    if Q.shape != (n, n) or not np.allclose(Q, Q.T, atol=1e-12) or np.min(np.linalg.eigvalsh(Q)) <= 0:
        raise NonSPDQ("Q must be symmetric positive definite with the size of A_m")
    if Ts <= 0:
        raise ValueError("Ts must be positive")
    if not desired.sys.is_stable():
        raise NotHurwitz("A_m must be Hurwitz")
    P = sla.solve_continuous_lyapunov(A.T, -Q)
    P = 0.5 * (P + P.T)
    w, V = np.linalg.eigh(P)
    sqrtP = (V * np.sqrt(w)) @ V.T
    D = _nullspace_rows(C @ np.linalg.inv(sqrtP)) if n > 2 else np.zeros((0, n))
    Lam = np.vstack((C, D @ sqrtP))
    if np.linalg.cond(Lam) > 1e12:
        raise SingularLambda("Lambda is singular")
    Lam_inv = np.linalg.inv(Lam)
    At = Lam @ A @ Lam_inv
    exp_term, integ = expm_integral(At, Ts)
    Phi = integ @ Lam
    if np.linalg.cond(Phi) > 1e14:
        raise SingularPhi("Phi(Ts) is numerically singular")
    one = np.zeros((n, 2))
    one[:2, :2] = np.eye(2)
    adapt = -np.linalg.solve(Phi, exp_term @ one)
    eAm, G = expm_integral(A, Ts)
    return L1Gains(
        Ts=Ts, P=P, Q=Q, sqrtP=sqrtP, D=D, Lambda=Lam, Phi=Phi, exp_term=exp_term,
        adapt_gain=adapt, eAm=eAm, pred_in=G, eAm_neg=np.linalg.inv(eAm),
        K_g=desired.K_g, C_m=C, B_m=B, C_pinv=desired.C_pinv,
    )


@dataclass
class L1State:
    x_hat: np.ndarray
    x_u: np.ndarray
    sigma_hat: np.ndarray
    step: int = 0


def adaptation_step(gains: L1Gains, y_hat, y_meas) -> np.ndarray:
    return gains.adapt_gain @ (np.asarray(y_hat, dtype=float) - np.asarray(y_meas, dtype=float))


def predictor_step(gains: L1Gains, state: L1State, u_d) -> tuple[np.ndarray, np.ndarray]:
    """Return (x_hat[i+1], y_hat[i]) driven by u_d[i] and sigma_hat[i]."""
    y_hat = gains.C_m @ state.x_hat
    drive = gains.B_m @ np.asarray(u_d, dtype=float) + state.sigma_hat
    return gains.eAm @ state.x_hat + gains.pred_in @ drive, y_hat


@dataclass(frozen=True)
class DiscreteFilter:
    """O(s) discretised at Ts with the sigma_hat pre-factor folded in."""
    Ao: np.ndarray
    Bo: np.ndarray
    Co: np.ndarray
    Ad: np.ndarray
    Bd: np.ndarray   # A_o^-1 (e^{A_o Ts} - I) B_o e^{-A_m Ts}

    @classmethod
    def from_filter(cls, filt: LtiSystem, gains: L1Gains) -> "DiscreteFilter":
        if np.any(filt.D != 0):
            raise NonProperFilter("O(s) must be strictly proper")
        Ad, G = expm_integral(filt.A, gains.Ts)
        return cls(filt.A, filt.B, filt.C, Ad, G @ filt.B @ gains.eAm_neg)


def control_step(gains: L1Gains, filt: DiscreteFilter, state: L1State,
                 omega_c) -> tuple[np.ndarray, np.ndarray]:
    """Return (u_d[i], x_u[i+1])."""
    u_d = gains.K_g @ np.asarray(omega_c, dtype=float) - filt.Co @ state.x_u
    return u_d, filt.Ad @ state.x_u + filt.Bd @ state.sigma_hat


def build_filter(desired: DesiredSystem, C_tf: LtiSystem, shift: float = 1.0,
                 minimal: bool = True) -> LtiSystem:
    """Realise O(s) = C(s) M^{-1}(s) C_m (sI - A_m)^{-1} (2 outputs, n_m inputs)."""
    if np.any(C_tf.D != 0):
        raise NonProperFilter("C(s) must be strictly proper")
    if not np.allclose(C_tf.dcgain(), np.eye(2), atol=1e-9):
        raise NonProperFilter(f"C(0) must be the identity, got {C_tf.dcgain()}")
    if not desired.zeros_stable():
        raise NonMinimumPhaseM("M(s) has non-minimum-phase transmission zeros")
    A, C = desired.sys.A, desired.sys.C
    X = LtiSystem(A, np.eye(A.shape[0]), C)
    O = C_tf @ desired.inverse_factor(shift) @ X.times_s(shift)
    if not O.is_stable():
        raise UnstableFilter("O(s) realisation has unstable modes")
    if np.any(np.abs(O.D) > 1e-12):
        raise NonProperFilter("C(s) M^{-1}(s) is not proper")
    O = LtiSystem(O.A, O.B, O.C, np.zeros_like(O.D))
    return O.minreal() if minimal else O


class L1Controller:
    """Stateful wrapper ticking the three laws once per sample period."""

    def __init__(self, desired: DesiredSystem, C_tf: LtiSystem, Ts: float, Q=None):
        self.desired = desired
        n = desired.sys.n
        self.gains = build_gains(desired, np.eye(n) if Q is None else Q, Ts)
        self.filter = DiscreteFilter.from_filter(build_filter(desired, C_tf), self.gains)
        self.state = None

    def reset(self, y0) -> L1State:
        g = self.gains
        self.state = L1State(g.C_pinv @ np.asarray(y0, dtype=float),
                             np.zeros(self.filter.Ao.shape[0]), np.zeros(g.n_m), 0)
        return self.state

    def tick(self, y_meas, omega_c, zero_sigma: bool = False) -> np.ndarray:
        if self.state is None:
            self.reset(y_meas)
        s, g = self.state, self.gains
        y_hat = g.C_m @ s.x_hat
        s.sigma_hat = np.zeros(g.n_m) if zero_sigma else adaptation_step(g, y_hat, y_meas)
        u_d, x_u_next = control_step(g, self.filter, s, omega_c)
        x_hat_next, _ = predictor_step(g, s, u_d)
        s.x_u, s.x_hat = x_u_next, x_hat_next
        s.step += 1
        self.y_hat = y_hat
        return u_d
