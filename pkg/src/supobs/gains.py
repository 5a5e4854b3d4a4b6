"""Observer gain design and certification.

Luenberger gains come from eigenvalue assignment plus a Lyapunov
certificate.  Circle-criterion gains are certified through the feasibility
of a 3x3 block matrix inequality in (P, M, K, L, nu, mu):

    [ P Acl + Acl' P + nu I    P G + (H + K C)' M    P      ]
    [          *              -2 M diag(1/b_k)       0      ]  <= 0
    [          *                      *            -mu I    ]

with Acl = A + L C and b_k the per-component slope upper bounds of the
nonlinearity.  (The inequality's middle block is indexed by the number of
nonlinearity components; dimensional consistency requires this even where
source material writes the parameter dimension.)

Synthesis solves the inequality as an SDP (it is linear in P, PL, M, MK,
nu, mu) through cvxpy on a diagonally rescaled congruence of the problem;
every candidate must then pass the package's own eigenvalue-based
verifier before it is accepted.  A grid/randomized alternating search is
available as a solver-free fallback, and externally computed gains can be
loaded from certificate files.
"""

import datetime
import json
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import (
    BadMError,
    BadPError,
    DimensionMismatchError,
    NotHurwitzError,
    NotNSDError,
    SynthesisBudgetExhaustedError,
    ZeroSectorBoundError,
)
from .linalg import is_hurwitz, solve_lyapunov, stabilizing_output_injection, sym_eig
from .observers import Assumption2Certificate

__all__ = [
    "CCLmiData",
    "CCSynthesisConfig",
    "assemble_cc_lmi",
    "verify_cc_gains",
    "synthesize_cc_gains",
    "design_luenberger",
    "save_certificate",
    "load_certificate",
]

DEFAULT_TOL_SCALE = 1e-7


@dataclass(frozen=True)
class CCLmiData:
    """Circle-criterion gain set with its inequality variables.

    ``M_diag`` stores the positive diagonal of the multiplier matrix;
    ``lmi_nu``/``lmi_mu`` are the inequality's scalars (named to avoid a
    clash with the supervisor's monitoring signals).
    """

    P: np.ndarray
    M_diag: np.ndarray
    K: np.ndarray
    L: np.ndarray
    lmi_nu: float
    lmi_mu: float
    sector_upper: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "P", np.asarray(self.P, dtype=float))
        object.__setattr__(self, "M_diag", np.atleast_1d(np.asarray(self.M_diag, dtype=float)))
        object.__setattr__(self, "K", np.atleast_2d(np.asarray(self.K, dtype=float)))
        object.__setattr__(self, "L", np.atleast_2d(np.asarray(self.L, dtype=float)))
        object.__setattr__(
            self, "sector_upper", np.atleast_1d(np.asarray(self.sector_upper, dtype=float))
        )

    @property
    def M(self):
        return np.diag(self.M_diag)


def assemble_cc_lmi(data: CCLmiData, A, G, C, H):
    """Assemble the (n_x + n_gamma + n_x) symmetric inequality matrix."""
    A = np.asarray(A, dtype=float)
    G = np.asarray(G, dtype=float)
    C = np.atleast_2d(np.asarray(C, dtype=float))
    H = np.atleast_2d(np.asarray(H, dtype=float))
    n = A.shape[0]
    ng = G.shape[1]
    ny = C.shape[0]
    if A.shape != (n, n) or G.shape != (n, ng) or C.shape[1] != n or H.shape != (ng, n):
        raise DimensionMismatchError(
            f"inconsistent shapes: A{A.shape} G{G.shape} C{C.shape} H{H.shape}"
        )
    if data.P.shape != (n, n) or data.M_diag.shape != (ng,):
        raise DimensionMismatchError("P or M has the wrong size for this plant")
    if data.K.shape != (ng, ny) or data.L.shape != (n, ny):
        raise DimensionMismatchError("K or L has the wrong size for this plant")
    if np.any(data.sector_upper == 0.0):
        raise ZeroSectorBoundError("sector upper bounds must be nonzero")
    P, M = data.P, data.M
    Acl = A + data.L @ C
    blkA = P @ Acl + Acl.T @ P + data.lmi_nu * np.eye(n)
    blkA = 0.5 * (blkA + blkA.T)
    blkB = P @ G + (H + data.K @ C).T @ M
    blkE = -2.0 * M @ np.diag(1.0 / data.sector_upper)
    blkE = 0.5 * (blkE + blkE.T)
    zero = np.zeros((ng, n))
    X = np.block(
        [
            [blkA, blkB, P],
            [blkB.T, blkE, zero],
            [P.T, zero.T, -data.lmi_mu * np.eye(n)],
        ]
    )
    return X


def _nsd_tol(X, tol):
    if tol is not None:
        return tol
    return DEFAULT_TOL_SCALE * max(1.0, float(np.max(np.abs(X))))


def verify_cc_gains(data: CCLmiData, A, G, C, H, tol=None):
    """Certificate for a circle-criterion gain set, or a rejection.

    Checks P > 0 and M > 0, assembles the inequality and tests negative
    semidefiniteness at ``tol`` (default ``1e-7 * max(1, |X|_max)``).

    Returns
    -------
    Assumption2Certificate
        With lambda0 = lmi_nu / (2 lambda_max(P)), a1 = lambda_min(P),
        a2 = n_x lambda_max(P).

    Raises
    ------
    BadPError, BadMError, NotNSDError
    """
    wP = sym_eig(data.P).eigenvalues
    if wP[0] <= 0:
        raise BadPError(f"P is not positive definite (min eig {wP[0]:g})")
    if np.any(data.M_diag <= 0):
        raise BadMError("M diagonal must be positive")
    if data.lmi_nu <= 0 or data.lmi_mu <= 0:
        raise NotNSDError("lmi_nu and lmi_mu must be positive", max_eig=None)
    X = assemble_cc_lmi(data, A, G, C, H)
    max_eig = float(sym_eig(X).eigenvalues[-1])
    if max_eig > _nsd_tol(X, tol):
        raise NotNSDError(
            f"inequality is not negative semidefinite (max eig {max_eig:g})", max_eig=max_eig
        )
    n_x = data.P.shape[0]
    return Assumption2Certificate(
        P=data.P,
        lambda0=data.lmi_nu / (2.0 * wP[-1]),
        a1=float(wP[0]),
        a2=float(n_x * wP[-1]),
        nu=data.lmi_nu,
        source="lmi",
    )


def design_luenberger(A, C, targets, nu=2.0):
    """Luenberger gain plus quadratic certificate for a linear pair.

    L assigns the target spectrum to A + L C; P solves the Lyapunov
    equation P Acl + Acl' P = -nu I with nu > 1 so the certificate decay
    carries slack for parameter mismatch.

    Returns ``(L, Assumption2Certificate)``.
    """
    if nu <= 1.0:
        raise ValueError("nu must be > 1")
    A = np.asarray(A, dtype=float)
    L = stabilizing_output_injection(A, C, targets)
    C2 = np.atleast_2d(np.asarray(C, dtype=float))
    P = solve_lyapunov(A + L @ C2, nu)
    w = sym_eig(P).eigenvalues
    n_x = A.shape[0]
    cert = Assumption2Certificate(
        P=P,
        lambda0=nu / (2.0 * w[-1]),
        a1=float(w[0]),
        a2=float(n_x * w[-1]),
        nu=nu,
        source="lyapunov",
    )
    return L, cert


# ---- synthesis --------------------------------------------------------------


@dataclass
class CCSynthesisConfig:
    """Search settings for circle-criterion gain synthesis.

    ``strategy`` is "lmi" (cvxpy SDP, default) or "random" (grid plus
    randomized alternating search).  ``fix_L``/``fix_K`` pin gains to a
    given matrix (0 is common when A is already Hurwitz); None lets the
    search choose.  The verification tolerance of accepted candidates is
    the verifier's default.
    """

    strategy: str = "lmi"
    solvers: Sequence[str] = ("CLARABEL", "SCS", "CVXOPT")
    margin: float = 1e-7
    budget: int = 3000
    seed: int = 0
    fix_L: Optional[np.ndarray] = None
    fix_K: Optional[np.ndarray] = None
    normalize: bool = True


def _scaling_vector(A):
    # d_j = sqrt(max(1, |A_j.|_inf)) equilibrates fast-chain states
    return np.sqrt(np.maximum(1.0, np.max(np.abs(A), axis=1)))


def _default_L(A, C, ny):
    if is_hurwitz(A):
        return np.zeros((A.shape[0], ny))
    n = A.shape[0]
    rho = max(1.0, float(np.max(np.abs(np.linalg.eigvals(A)))))
    targets = [-(1.0 + 0.5 * j) * rho / n for j in range(n)]
    return stabilizing_output_injection(A, C, targets)


def _solve_cc_sdp(A, G_list, C, H, b_sec, cfg):
    import cvxpy as cp

    n = A.shape[0]
    ng = G_list[0].shape[1]
    ny = C.shape[0]
    d = _scaling_vector(A)
    D = np.diag(d)
    Dinv = np.diag(1.0 / d)
    As = Dinv @ A @ D
    Cs = C @ D
    Hs = H @ D
    D2 = np.diag(d * d)

    P = cp.Variable((n, n), symmetric=True)
    m = cp.Variable(ng)
    mu = cp.Variable()
    t = cp.Variable()
    free_L = cfg.fix_L is None and not is_hurwitz(A)
    # a fixed non-Hurwitz A with no injection can never satisfy the (1,1)
    # block, so only go through the SDP when the closed loop can be stable
    L_fixed = cfg.fix_L
    if L_fixed is None and not free_L:
        L_fixed = np.zeros((n, ny))
    Y = cp.Variable((n, ny)) if free_L else None
    free_K = cfg.fix_K is None
    W = cp.Variable((ng, ny)) if free_K else None

    nu = 1.0  # homogeneous normalization; rescaled after the solve
    cons = [P >> 1e-4 * np.eye(n), P << t * np.eye(n), m >= 1e-6, mu >= 1e-6]
    for G in G_list:
        Gs = Dinv @ G
        M = cp.diag(m)
        if free_L:
            Acl = P @ As + Y @ Cs
        else:
            Acl = P @ (As + (Dinv @ L_fixed) @ Cs)
        blkA = Acl + Acl.T + nu * D2
        blkB = P @ Gs + Hs.T @ M
        if free_K:
            blkB = blkB + Cs.T @ W.T
        elif np.any(np.asarray(cfg.fix_K) != 0.0):
            blkB = blkB + Cs.T @ np.asarray(cfg.fix_K, dtype=float).T @ M
        blkE = -2.0 * M @ np.diag(1.0 / b_sec)
        rows = [
            cp.hstack([blkA, blkB, P]),
            cp.hstack([blkB.T, blkE, np.zeros((ng, n))]),
            cp.hstack([P, np.zeros((n, ng)), -mu * D2]),
        ]
        cons.append(cp.vstack(rows) << -cfg.margin * np.eye(2 * n + ng))
    prob = cp.Problem(cp.Minimize(t + 1e-2 * mu + 1e-2 * cp.sum(m)), cons)

    for solver in cfg.solvers:
        try:
            prob.solve(solver=solver, verbose=False)
        except Exception:
            continue
        if prob.status not in ("optimal", "optimal_inaccurate") or P.value is None:
            continue
        Pv = Dinv @ P.value @ Dinv
        Pv = 0.5 * (Pv + Pv.T)
        mv = np.maximum(np.asarray(m.value, dtype=float), 1e-12)
        muv = float(mu.value)
        if free_L:
            Lv = D @ np.linalg.solve(P.value, Y.value)
        else:
            Lv = L_fixed
        Kv = (np.asarray(W.value) / mv[:, None]) if free_K else cfg.fix_K
        data = CCLmiData(
            P=Pv, M_diag=mv, K=Kv, L=Lv, lmi_nu=nu, lmi_mu=muv, sector_upper=b_sec
        )
        if cfg.normalize:
            s = 1.0 / float(sym_eig(Pv).eigenvalues[-1])
            data = CCLmiData(
                P=s * Pv, M_diag=s * mv, K=Kv, L=Lv,
                lmi_nu=s * nu, lmi_mu=s * muv, sector_upper=b_sec,
            )
        try:
            for G in G_list:
                verify_cc_gains(data, A, G, C, H)
        except (NotNSDError, BadPError, BadMError):
            continue
        return data
    return None


def _random_search(A, G_list, C, H, b_sec, cfg):
    n = A.shape[0]
    ng = G_list[0].shape[1]
    ny = C.shape[0]
    rng = np.random.default_rng(cfg.seed)

    L_candidates = []
    if cfg.fix_L is not None:
        L_candidates.append(np.asarray(cfg.fix_L, dtype=float))
    else:
        if is_hurwitz(A):
            L_candidates.append(np.zeros((n, ny)))
        for _ in range(3):
            rho = max(1.0, float(np.max(np.abs(np.linalg.eigvals(A)))))
            targets = -np.sort(rng.uniform(0.3, 2.0, size=n)) * rho - 0.05 * np.arange(n)
            try:
                L_candidates.append(stabilizing_output_injection(A, C, targets))
            except Exception:
                continue

    K_candidates = [np.zeros((ng, ny))] if cfg.fix_K is None else [np.asarray(cfg.fix_K)]
    if cfg.fix_K is None:
        K_candidates += [rng.normal(scale=0.5, size=(ng, ny)) for _ in range(2)]

    m_grid = [10.0**k for k in range(-2, 3)]
    mu_grid = [1.0, 10.0, 100.0, 1e3, 1e4]
    tried = 0
    for L in L_candidates:
        Acl = A + L @ C
        if not is_hurwitz(Acl):
            continue
        for nu_lyap in (1.0, 2.0, 6.0, 10.0):
            try:
                P = solve_lyapunov(Acl, nu_lyap)
            except NotHurwitzError:
                continue
            for K in K_candidates:
                for m_scale in m_grid:
                    M_diag = m_scale * np.ones(ng)
                    for lmi_nu in (0.5 * nu_lyap, 0.25 * nu_lyap):
                        for lmi_mu in mu_grid:
                            tried += 1
                            if tried > cfg.budget:
                                return None
                            data = CCLmiData(
                                P=P, M_diag=M_diag, K=K, L=L,
                                lmi_nu=lmi_nu, lmi_mu=lmi_mu, sector_upper=b_sec,
                            )
                            try:
                                for G in G_list:
                                    verify_cc_gains(data, A, G, C, H)
                            except (NotNSDError, BadPError, BadMError):
                                continue
                            return data
    return None


def synthesize_cc_gains(A, G, C, H, sector_upper, config: Optional[CCSynthesisConfig] = None):
    """Best-effort circle-criterion gain synthesis.

    ``G`` may be a single matrix or a sequence of matrices; in the latter
    case the same gain set is certified simultaneously for every matrix
    (the inequality is affine in G, so certifying the vertices of a
    parameter box certifies the whole box).

    Returns a :class:`CCLmiData` whose certificate has been confirmed by
    :func:`verify_cc_gains`, or raises
    :class:`SynthesisBudgetExhaustedError`.  Synthesis failure is not a
    correctness error: externally computed gains can be supplied through
    a certificate file.
    """
    cfg = config or CCSynthesisConfig()
    A = np.asarray(A, dtype=float)
    C = np.atleast_2d(np.asarray(C, dtype=float))
    H = np.atleast_2d(np.asarray(H, dtype=float))
    G_list = [np.asarray(g, dtype=float) for g in (G if isinstance(G, (list, tuple)) else [G])]
    b_sec = np.atleast_1d(np.asarray(sector_upper, dtype=float))
    if np.any(b_sec == 0):
        raise ZeroSectorBoundError("sector upper bounds must be nonzero")

    data = None
    if cfg.strategy == "lmi":
        try:
            data = _solve_cc_sdp(A, G_list, C, H, b_sec, cfg)
        except ImportError:
            data = None
        if data is None:
            data = _random_search(A, G_list, C, H, b_sec, cfg)
    elif cfg.strategy == "random":
        data = _random_search(A, G_list, C, H, b_sec, cfg)
    else:
        raise ValueError(f"unknown synthesis strategy {cfg.strategy!r}")
    if data is None:
        raise SynthesisBudgetExhaustedError(
            "no certified gain set found within the synthesis budget"
        )
    return data


# ---- certificate files -------------------------------------------------------

_FORMAT_VERSION = 1


def _mat(x):
    return np.asarray(x, dtype=float).tolist()


def save_certificate(path, data: CCLmiData, A, G, C, H, p=None, observer_class="circle_criterion"):
    """Write a self-describing JSON gain certificate.

    Floats serialize through Python's shortest round-trip repr, so a
    load immediately after a save reproduces every matrix bit for bit.
    """
    X = assemble_cc_lmi(data, A, G, C, H)
    max_eig = float(sym_eig(X).eigenvalues[-1])
    tol = _nsd_tol(X, None)
    if max_eig > tol:
        raise NotNSDError(
            f"refusing to save an uncertified gain set (max eig {max_eig:g})", max_eig=max_eig
        )
    doc = {
        "format_version": _FORMAT_VERSION,
        "observer_class": observer_class,
        "created": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "p": None if p is None else _mat(p),
        "P": _mat(data.P),
        "M_diag": _mat(data.M_diag),
        "K": _mat(data.K),
        "L": _mat(data.L),
        "lmi_nu": data.lmi_nu,
        "lmi_mu": data.lmi_mu,
        "sector_upper": _mat(data.sector_upper),
        "plant_A": _mat(A),
        "plant_G": _mat(G),
        "plant_C": _mat(np.atleast_2d(C)),
        "plant_H": _mat(np.atleast_2d(H)),
        "max_eig": max_eig,
        "tol": tol,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
    return doc


def load_certificate(path):
    """Read a JSON gain certificate; returns (CCLmiData, metadata dict)."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format_version") != _FORMAT_VERSION:
        raise ValueError(f"unsupported certificate format {doc.get('format_version')!r}")
    if doc["max_eig"] > doc["tol"]:
        raise NotNSDError(
            f"certificate file records max eig {doc['max_eig']:g} above its tolerance",
            max_eig=doc["max_eig"],
        )
    data = CCLmiData(
        P=np.array(doc["P"], dtype=float),
        M_diag=np.array(doc["M_diag"], dtype=float),
        K=np.array(doc["K"], dtype=float),
        L=np.array(doc["L"], dtype=float),
        lmi_nu=float(doc["lmi_nu"]),
        lmi_mu=float(doc["lmi_mu"]),
        sector_upper=np.array(doc["sector_upper"], dtype=float),
    )
    return data, doc
