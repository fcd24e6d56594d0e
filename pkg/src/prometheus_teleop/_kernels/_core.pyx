# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementations of the hot kernels: DH chain composition, the
closed-form UR joint branches, and the framing CRC. Semantics mirror
`pure.py` exactly; cross-backend agreement is covered by tests.
"""
import numpy as np

from libc.math cimport atan2, cos, sin, sqrt, acos, asin, fabs, hypot, isfinite, M_PI


cdef inline void _dh_fill(double[4][4] M, double theta, double a, double d,
                          double alpha) nogil:
    cdef double ct = cos(theta)
    cdef double st = sin(theta)
    cdef double ca = cos(alpha)
    cdef double sa = sin(alpha)
    M[0][0] = ct; M[0][1] = -st * ca; M[0][2] = st * sa; M[0][3] = a * ct
    M[1][0] = st; M[1][1] = ct * ca; M[1][2] = -ct * sa; M[1][3] = a * st
    M[2][0] = 0.0; M[2][1] = sa; M[2][2] = ca; M[2][3] = d
    M[3][0] = 0.0; M[3][1] = 0.0; M[3][2] = 0.0; M[3][3] = 1.0


cdef inline void _mat4_mul(double[4][4] out, double[4][4] A, double[4][4] B) nogil:
    cdef int i, j, k
    cdef double acc
    for i in range(4):
        for j in range(4):
            acc = 0.0
            for k in range(4):
                acc += A[i][k] * B[k][j]
            out[i][j] = acc


cdef inline void _mat4_copy(double[4][4] dst, double[4][4] src) nogil:
    cdef int i, j
    for i in range(4):
        for j in range(4):
            dst[i][j] = src[i][j]


cdef inline void _rigid_inverse(double[4][4] out, double[4][4] T) nogil:
    # Inverse of a homogeneous rigid transform: Rᵀ, -Rᵀ·t.
    cdef int i, j
    for i in range(3):
        for j in range(3):
            out[i][j] = T[j][i]
    for i in range(3):
        out[i][3] = -(T[0][i] * T[0][3] + T[1][i] * T[1][3] + T[2][i] * T[2][3])
    out[3][0] = 0.0; out[3][1] = 0.0; out[3][2] = 0.0; out[3][3] = 1.0


def fk_frames(q, a, d, alpha, theta_offset):
    """Cumulative DH frames: (7,4,4) array, frames[0] = identity, frames[6] = tool."""
    cdef double[::1] qv = np.ascontiguousarray(q, dtype=np.float64)
    cdef double[::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef double[::1] dv = np.ascontiguousarray(d, dtype=np.float64)
    cdef double[::1] alv = np.ascontiguousarray(alpha, dtype=np.float64)
    cdef double[::1] ofv = np.ascontiguousarray(theta_offset, dtype=np.float64)
    out = np.empty((7, 4, 4), dtype=np.float64)
    cdef double[:, :, ::1] ov = out
    cdef double[4][4] T, A, tmp
    cdef int i, r, c
    for r in range(4):
        for c in range(4):
            T[r][c] = 1.0 if r == c else 0.0
            ov[0, r, c] = T[r][c]
    for i in range(6):
        _dh_fill(A, qv[i] + ofv[i], av[i], dv[i], alv[i])
        _mat4_mul(tmp, T, A)
        _mat4_copy(T, tmp)
        for r in range(4):
            for c in range(4):
                ov[i + 1, r, c] = T[r][c]
    return out


cdef inline double _wrap(double x) nogil:
    cdef double y = (x + M_PI) % (2.0 * M_PI)
    if y < 0.0:
        y += 2.0 * M_PI
    return y - M_PI


def ik_candidates(T06, double d1, double a2, double a3, double d4, double d5,
                  double d6):
    """Closed-form joint candidates for a UR-pattern arm reaching pose T06.

    Same branch enumeration and cutoffs as the pure backend: returns
    (candidates (n,6), singular-branch count).
    """
    cdef double[:, ::1] Tv = np.ascontiguousarray(T06, dtype=np.float64)
    out = np.empty((8, 6), dtype=np.float64)
    cdef double[:, ::1] ov = out
    cdef int count = 0
    cdef int n_singular = 0

    cdef double[4][4] T, T01, T10, T16, T61, T45, T56, T65_54, T14, T12, T23, T34
    cdef double[4][4] tmp, tmp2
    cdef int r, c, i1, i5, i3
    for r in range(4):
        for c in range(4):
            T[r][c] = Tv[r][c]

    cdef double p05x = T[0][3] - d6 * T[0][2]
    cdef double p05y = T[1][3] - d6 * T[1][2]
    cdef double radial = hypot(p05x, p05y)
    if radial < fabs(d4) or not isfinite(radial):
        return out[:0].copy(), 0
    cdef double psi = atan2(p05y, p05x)
    cdef double arg = d4 / radial
    if arg > 1.0:
        arg = 1.0
    elif arg < -1.0:
        arg = -1.0
    cdef double phi = acos(arg)
    cdef double q1, q5, q6, q3, q2, q4, c5, s5, c3, reach
    cdef double p13x, p13y, p13z

    for i1 in range(2):
        q1 = psi + phi + M_PI / 2.0 if i1 == 0 else psi - phi + M_PI / 2.0
        _dh_fill(T01, q1, 0.0, d1, M_PI / 2.0)
        _rigid_inverse(T10, T01)
        _mat4_mul(T16, T10, T)
        c5 = (T16[2][3] - d4) / d6
        if fabs(c5) > 1.0 + 1e-9:
            continue
        if c5 > 1.0:
            c5 = 1.0
        elif c5 < -1.0:
            c5 = -1.0
        for i5 in range(2):
            q5 = acos(c5) if i5 == 0 else -acos(c5)
            s5 = sin(q5)
            if fabs(s5) < 1e-6:
                n_singular += 1
                continue
            _rigid_inverse(T61, T16)
            q6 = atan2(-T61[1][2] / s5, T61[0][2] / s5)
            _dh_fill(T45, q5, 0.0, d5, -M_PI / 2.0)
            _dh_fill(T56, q6, 0.0, d6, 0.0)
            _mat4_mul(tmp, T45, T56)
            _rigid_inverse(T65_54, tmp)
            _mat4_mul(T14, T16, T65_54)
            p13x = T14[0][3] - d4 * T14[0][1]
            p13y = T14[1][3] - d4 * T14[1][1]
            p13z = T14[2][3] - d4 * T14[2][1]
            reach = sqrt(p13x * p13x + p13y * p13y + p13z * p13z)
            c3 = (reach * reach - a2 * a2 - a3 * a3) / (2.0 * a2 * a3)
            if fabs(c3) > 1.0 + 1e-9:
                continue
            if c3 > 1.0:
                c3 = 1.0
            elif c3 < -1.0:
                c3 = -1.0
            for i3 in range(2):
                q3 = acos(c3) if i3 == 0 else -acos(c3)
                q2 = -atan2(p13y, -p13x) + asin(a3 * sin(q3) / reach)
                _dh_fill(T12, q2, a2, 0.0, 0.0)
                _dh_fill(T23, q3, a3, 0.0, 0.0)
                _rigid_inverse(tmp, T23)
                _rigid_inverse(tmp2, T12)
                _mat4_mul(T34, tmp, tmp2)
                _mat4_mul(tmp, T34, T14)
                q4 = atan2(tmp[1][0], tmp[0][0])
                ov[count, 0] = _wrap(q1)
                ov[count, 1] = _wrap(q2)
                ov[count, 2] = _wrap(q3)
                ov[count, 3] = _wrap(q4)
                ov[count, 4] = _wrap(q5)
                ov[count, 5] = _wrap(q6)
                count += 1
    return out[:count].copy(), n_singular


def crc16_ccitt_false(data, int crc=0xFFFF):
    """CRC-16/CCITT-FALSE: poly 0x1021, init 0xFFFF, no reflection, no xor-out."""
    cdef const unsigned char[::1] buf = data
    cdef Py_ssize_t i, n = buf.shape[0]
    cdef unsigned int acc = <unsigned int> crc
    cdef int bit
    with nogil:
        for i in range(n):
            acc ^= (<unsigned int> buf[i]) << 8
            for bit in range(8):
                if acc & 0x8000:
                    acc = ((acc << 1) ^ 0x1021) & 0xFFFF
                else:
                    acc = (acc << 1) & 0xFFFF
    return acc
