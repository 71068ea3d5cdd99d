"""Compiled inner loops for the Bloch ensemble.

Only the six independent entries of each Hermitian density matrix are
evolved (three real populations, three complex coherences), which keeps
Hermiticity exact and the trace derivative identically zero.
"""

import numba
import numpy as np


@numba.njit(cache=True, inline="always")
def _deriv(a, b, c, p, q, s, om_s, om_c, delta, gamma):
    # a, b, c: rho11, rho22, rho33; p, q, s: rho12, rho13, rho23
    xs = (om_s * np.conj(q)).imag
    xc = (om_c * np.conj(s)).imag
    half = 0.5 * gamma
    da = -xs + half * c
    db = -xc + half * c
    dc = xs + xc - gamma * c
    dp = 0.5j * (om_s * np.conj(s) - q * np.conj(om_c))
    dq = (1j * delta - half) * q + 0.5j * (om_s * (c - a) - p * om_c)
    ds = (1j * delta - half) * s + 0.5j * (om_c * (c - b) - np.conj(p) * om_s)
    return da, db, dc, dp, dq, ds


@numba.njit(cache=True)
def bloch_sweep(om_s, om_c, om_s_mid, om_c_mid, deltas, weights, gamma, dt, rho0,
                order, snap_idx, coh13, coh23, snaps):
    """March every Doppler node across the T grid at fixed z.

    Fills ``coh13``/``coh23`` with weighted node sums of rho13/rho23 at each
    T sample and ``snaps[k]`` with the node states at ``snap_idx[k]``.
    Returns the largest population magnitude seen, for blow-up detection.
    """
    nt = om_s.shape[0]
    n_snap = snap_idx.shape[0]
    coh13[:] = 0.0
    coh23[:] = 0.0
    h = 0.5 * dt
    sixth = dt / 6.0
    worst = 0.0
    for n in range(deltas.shape[0]):
        d = deltas[n]
        w = weights[n]
        a = rho0[n, 0, 0].real
        b = rho0[n, 1, 1].real
        c = rho0[n, 2, 2].real
        p = rho0[n, 0, 1]
        q = rho0[n, 0, 2]
        s = rho0[n, 1, 2]
        k_snap = 0
        for i in range(nt):
            coh13[i] += w * q
            coh23[i] += w * s
            while k_snap < n_snap and snap_idx[k_snap] == i:
                snaps[k_snap, n, 0, 0] = a
                snaps[k_snap, n, 1, 1] = b
                snaps[k_snap, n, 2, 2] = c
                snaps[k_snap, n, 0, 1] = p
                snaps[k_snap, n, 1, 0] = np.conj(p)
                snaps[k_snap, n, 0, 2] = q
                snaps[k_snap, n, 2, 0] = np.conj(q)
                snaps[k_snap, n, 1, 2] = s
                snaps[k_snap, n, 2, 1] = np.conj(s)
                k_snap += 1
            if i == nt - 1:
                break
            a1, b1, c1, p1, q1, s1 = _deriv(a, b, c, p, q, s, om_s[i], om_c[i], d, gamma)
            if order == 4:
                a2, b2, c2, p2, q2, s2 = _deriv(a + h * a1, b + h * b1, c + h * c1, p + h * p1,
                                                q + h * q1, s + h * s1, om_s_mid[i], om_c_mid[i], d, gamma)
                a3, b3, c3, p3, q3, s3 = _deriv(a + h * a2, b + h * b2, c + h * c2, p + h * p2,
                                                q + h * q2, s + h * s2, om_s_mid[i], om_c_mid[i], d, gamma)
                a4, b4, c4, p4, q4, s4 = _deriv(a + dt * a3, b + dt * b3, c + dt * c3, p + dt * p3,
                                                q + dt * q3, s + dt * s3, om_s[i + 1], om_c[i + 1], d, gamma)
                a += sixth * (a1 + 2 * a2 + 2 * a3 + a4)
                b += sixth * (b1 + 2 * b2 + 2 * b3 + b4)
                c += sixth * (c1 + 2 * c2 + 2 * c3 + c4)
                p += sixth * (p1 + 2 * p2 + 2 * p3 + p4)
                q += sixth * (q1 + 2 * q2 + 2 * q3 + q4)
                s += sixth * (s1 + 2 * s2 + 2 * s3 + s4)
            else:
                a2, b2, c2, p2, q2, s2 = _deriv(a + h * a1, b + h * b1, c + h * c1, p + h * p1,
                                                q + h * q1, s + h * s1, om_s_mid[i], om_c_mid[i], d, gamma)
                a += dt * a2
                b += dt * b2
                c += dt * c2
                p += dt * p2
                q += dt * q2
                s += dt * s2
            m = max(abs(a), abs(b), abs(c))
            if m > worst:
                worst = m
    return worst
