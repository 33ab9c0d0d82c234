# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled contact-time kernel.

Twin of _pykern.contact_times_scan -- same operations in the same order so
both backends emit bit-identical times (the build disables FP contraction
for exactly this reason).
"""

from libc.math cimport sqrt, fabs, INFINITY
from libc.stdint cimport int64_t


def contact_times_scan(double[:, ::1] pos, double[:, ::1] vel,
                       double[::1] tupd, Py_ssize_t i, int64_t[::1] js,
                       double four_a2, double grazing_tol, double[::1] out):
    """See _pykern.contact_times_scan; out[m] = contact time or +inf."""
    cdef Py_ssize_t m, k, jj
    cdef Py_ssize_t nc = js.shape[0]
    cdef Py_ssize_t n = pos.shape[1]
    cdef double ti = tupd[i]
    cdef double ref, dti, dtj, b, A, c, dy, dv, disc, scale, s

    for m in range(nc):
        jj = <Py_ssize_t> js[m]
        ref = ti if ti >= tupd[jj] else tupd[jj]
        dti = ref - ti
        dtj = ref - tupd[jj]
        b = 0.0
        A = 0.0
        c = 0.0
        for k in range(n):
            dy = (pos[i, k] + dti * vel[i, k]) - (pos[jj, k] + dtj * vel[jj, k])
            dv = vel[i, k] - vel[jj, k]
            b = b + dy * dv
            A = A + dv * dv
            c = c + dy * dy
        c = c - four_a2
        if four_a2 == 0.0:
            # point particles on the line: approaching points always meet,
            # and the quadratic is a perfect square (disc == 0 up to roundoff)
            out[m] = ref + c / (-b) if b < 0.0 else INFINITY
            continue
        disc = b * b - A * c
        scale = b * b + A * fabs(c)
        if b < 0.0 and disc >= grazing_tol * scale:
            s = c / (-b + sqrt(disc))
            if s >= 0.0:
                out[m] = ref + s
                continue
        out[m] = INFINITY
