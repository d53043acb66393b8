"""Numba inner loops for the Lindblad propagation.

The right-hand side is assembled in a structurally trace- and
Hermiticity-preserving form: the commutator as C - C^dag and the
anticommutator as E + E^dag, so those invariants hold to rounding error at
any step size.
"""

import numpy as np
from numba import njit


@njit(cache=True, fastmath=True, nogil=True)
def _rhs(out, y, H, l00, l01, l10, l11, p00, p01, rate, inv_hbar, C, B, E):
    # out = -i/hbar [H, y] + rate * (L y L^dag - 0.5 {L^dag L, y})
    # with L = Lv (x) I_spin acting on the valley index, Lv = [[l00,l01],[l10,l11]],
    # and P = L^dag L = [[p00, p01],[conj(p01), p00]] (x) I_spin.
    for a in range(4):
        for b in range(4):
            z = H[a, 0] * y[0, b]
            z += H[a, 1] * y[1, b]
            z += H[a, 2] * y[2, b]
            z += H[a, 3] * y[3, b]
            C[a, b] = z
    for a in range(4):
        for b in range(4):
            out[a, b] = -1j * inv_hbar * (C[a, b] - np.conj(C[b, a]))
    if rate == 0.0:
        return
    for v in range(2):
        lv0 = l00 if v == 0 else l10
        lv1 = l01 if v == 0 else l11
        for s in range(2):
            r = 2 * v + s
            for c in range(4):
                B[r, c] = lv0 * y[s, c] + lv1 * y[2 + s, c]
    # D1 = B (Lv (x) I)^dag  and  E = P y (left apply of P)
    cp01 = np.conj(p01)
    for a in range(4):
        for v in range(2):
            lv0 = np.conj(l00) if v == 0 else np.conj(l10)
            lv1 = np.conj(l01) if v == 0 else np.conj(l11)
            for s in range(2):
                d1 = B[a, s] * lv0 + B[a, 2 + s] * lv1
                out[a, 2 * v + s] += rate * d1
    for v in range(2):
        pv0 = p00 if v == 0 else cp01
        pv1 = p01 if v == 0 else p00
        for s in range(2):
            r = 2 * v + s
            for c in range(4):
                E[r, c] = pv0 * y[s, c] + pv1 * y[2 + s, c]
    for a in range(4):
        for b in range(4):
            out[a, b] -= 0.5 * rate * (E[a, b] + np.conj(E[b, a]))


@njit(cache=True, fastmath=True, nogil=True)
def _build_h(H, dr, di, ur, ui, e_z, kappa_z):
    half_ez = 0.5 * e_z
    dv = dr - 1j * di
    uv = ur - 1j * ui
    H[0, 0] = half_ez
    H[1, 1] = -half_ez
    H[2, 2] = half_ez
    H[3, 3] = -half_ez
    H[0, 1] = 0.0
    H[1, 0] = 0.0
    H[2, 3] = 0.0
    H[3, 2] = 0.0
    H[0, 3] = 0.0
    H[3, 0] = 0.0
    H[1, 2] = 0.0
    H[2, 1] = 0.0
    H[0, 2] = dv - kappa_z * uv
    H[2, 0] = np.conj(H[0, 2])
    H[1, 3] = dv + kappa_z * uv
    H[3, 1] = np.conj(H[1, 3])


@njit(cache=True, fastmath=True, nogil=True)
def rk4_lindblad(
    rho0,
    x,
    dt,
    substeps,
    map_x0,
    map_inv_dx,
    map_dr,
    map_di,
    e_z,
    kappa_z,
    hbar,
    rate,
    eps_delta,
    ur0,
    ui0,
    states,
):
    """Propagate rho0 along x(t), writing the state at every grid point.

    Returns the number of samples where |Delta| fell below eps_delta and the
    local valley axis was frozen at its last well-defined value.
    """
    n = x.size
    m = map_dr.size
    h = dt / substeps
    inv_hbar = 1.0 / hbar

    rho = rho0.copy()
    H = np.empty((4, 4), np.complex128)
    k1 = np.empty((4, 4), np.complex128)
    k2 = np.empty((4, 4), np.complex128)
    k3 = np.empty((4, 4), np.complex128)
    k4 = np.empty((4, 4), np.complex128)
    y = np.empty((4, 4), np.complex128)
    sc = np.empty((4, 4), np.complex128)
    sb = np.empty((4, 4), np.complex128)
    se = np.empty((4, 4), np.complex128)

    ur = ur0
    ui = ui0
    frozen = 0
    states[0] = rho

    for i in range(n - 1):
        xa = x[i]
        dx_step = x[i + 1] - x[i]
        for q in range(substeps):
            for half in range(3):
                frac = (q + 0.5 * half) / substeps
                xp = xa + dx_step * frac
                u = (xp - map_x0) * map_inv_dx
                j = int(u)
                if j < 0:
                    j = 0
                elif j > m - 2:
                    j = m - 2
                w = u - j
                dr = map_dr[j] + w * (map_dr[j + 1] - map_dr[j])
                di = map_di[j] + w * (map_di[j + 1] - map_di[j])
                d = np.sqrt(dr * dr + di * di)
                if d >= eps_delta:
                    ur = dr / d
                    ui = di / d
                else:
                    frozen += 1
                l00 = 0.5
                l01 = 0.5 * (ur - 1j * ui)
                l10 = -0.5 * (ur + 1j * ui)
                l11 = -0.5
                p00 = 0.5
                p01 = 0.5 * (ur - 1j * ui)
                _build_h(H, dr, di, ur, ui, e_z, kappa_z)
                if half == 0:
                    _rhs(k1, rho, H, l00, l01, l10, l11, p00, p01, rate, inv_hbar,
                         sc, sb, se)
                elif half == 1:
                    for a in range(4):
                        for b in range(4):
                            y[a, b] = rho[a, b] + 0.5 * h * k1[a, b]
                    _rhs(k2, y, H, l00, l01, l10, l11, p00, p01, rate, inv_hbar,
                         sc, sb, se)
                    for a in range(4):
                        for b in range(4):
                            y[a, b] = rho[a, b] + 0.5 * h * k2[a, b]
                    _rhs(k3, y, H, l00, l01, l10, l11, p00, p01, rate, inv_hbar,
                         sc, sb, se)
                else:
                    for a in range(4):
                        for b in range(4):
                            y[a, b] = rho[a, b] + h * k3[a, b]
                    _rhs(k4, y, H, l00, l01, l10, l11, p00, p01, rate, inv_hbar,
                         sc, sb, se)
            sixth = h / 6.0
            for a in range(4):
                for b in range(4):
                    rho[a, b] += sixth * (
                        k1[a, b] + 2.0 * k2[a, b] + 2.0 * k3[a, b] + k4[a, b]
                    )
        states[i + 1] = rho
    return frozen
