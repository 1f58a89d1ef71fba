"""Independent reference constructions shared by the test modules."""
import numpy as np

from sbpsat.discretization import dirichlet_bound, interface_selectors, tau_bound
from sbpsat.sbp import GridLine1D, build_sbp


def direct_conforming_Q(order, n, safety=1.2, dirichlet_safety=2.0):
    """Two n x n blocks on [-1,0]x[0,1] and [0,1]x[0,1], conforming at x=0."""
    gx = build_sbp(order, GridLine1D.on_interval(-1, 0, n))
    gy = build_sbp(order, GridLine1D.on_interval(0, 1, n))
    h, a = gx.h, gx.alpha
    I = np.eye(n)
    Hi = np.diag(gx.Hinv)
    S = gx.S.toarray()
    D2 = gx.D2.toarray()
    Hyi = np.diag(gy.Hinv); Sy = gy.S.toarray(); D2y = gy.D2.toarray()
    tau = safety * tau_bound(a, h, h)
    sd = dirichlet_safety * dirichlet_bound(a, h)
    e0 = np.zeros((n, n)); e0[0, 0] = 1
    eN = np.zeros((n, n)); eN[-1, -1] = 1
    sel = interface_selectors(n, n)
    E0L, E0R, ELR, ERL = (sel[k].toarray() for k in ("E_0L", "E_0R", "E_LR", "E_RL"))
    base = np.kron(D2, I) + np.kron(I, D2y)
    # south/north Dirichlet on both blocks
    ydir = np.kron(I, Hyi @ (-(Sy.T @ e0) + (Sy.T @ eN) - sd * (e0 + eN)))
    QL = base + ydir + np.kron(Hi @ (-(S.T @ e0) - sd * e0), I)
    QR = base + ydir + np.kron(Hi @ ((S.T @ eN) - sd * eN), I)
    # interface: left side sigma=+1, right side sigma=-1
    QL += np.kron(Hi @ (0.5 * S.T @ E0L - tau * E0L - 0.5 * E0L @ S), I)
    QLR = np.kron(Hi @ (-0.5 * S.T @ ELR + tau * ELR + 0.5 * ELR @ S), I)
    QR += np.kron(Hi @ (-0.5 * S.T @ E0R - tau * E0R + 0.5 * E0R @ S), I)
    QRL = np.kron(Hi @ (0.5 * S.T @ ERL + tau * ERL - 0.5 * ERL @ S), I)
    return np.block([[QL, QLR], [QRL, QR]])
