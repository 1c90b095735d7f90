"""Independent high-precision oracle used to freeze expected test values.

The error function is recomputed here from scratch in arbitrary precision:
a Maclaurin series for moderate arguments and the asymptotic erfc expansion
for large ones.  Nothing in src/ is imported, so agreement between the
library and this module is meaningful evidence rather than a tautology.

The Maclaurin series for erf suffers catastrophic cancellation for large x
(terms grow like e^{x^2} before shrinking), so the working precision is
raised by about 0.44 * x^2 digits while summing.  The asymptotic series for
erfc is divergent; it is truncated at its smallest term, which bounds the
error by that term, far below our needs for x > 8.
"""

from __future__ import annotations

import mpmath
from mpmath import mp, mpf

ORACLE_DPS = 50


def erf_oracle(x) -> mpf:
    """erf(x) from series alone, accurate to ~1e-50 over the real line."""
    with mp.workdps(ORACLE_DPS):
        x = mpf(x)
        if x < 0:
            return -erf_oracle(-x)
        if x == 0:
            return mpf(0)
        if x <= 8:
            extra = int(0.44 * float(x) * float(x)) + 15
            with mp.workdps(mp.dps + extra):
                total = mpf(0)
                term = mpf(x)
                n = 0
                while True:
                    contrib = term / (2 * n + 1)
                    total += contrib if n % 2 == 0 else -contrib
                    if abs(contrib) < mpf(10) ** (-55) * max(abs(total), mpf(1)):
                        break
                    n += 1
                    term = term * x * x / n
                result = 2 / mpmath.sqrt(mpmath.pi) * total
            return +result
        # erfc(x) ~ exp(-x^2)/(x sqrt(pi)) * sum (-1)^k (2k-1)!!/(2x^2)^k,
        # truncated at the smallest term (asymptotic, not convergent).
        s = mpf(1)
        term = mpf(1)
        prev = mpf("inf")
        k = 1
        while True:
            term = term * (2 * k - 1) / (2 * x * x)
            if term >= prev or term < mpf(10) ** (-55):
                break
            s += term if k % 2 == 0 else -term
            prev = term
            k += 1
        erfc = mpmath.exp(-x * x) / (x * mpmath.sqrt(mpmath.pi)) * s
        return 1 - erfc


def step_profile_oracle(y, i_min, i_max, sigma) -> mpf:
    with mp.workdps(ORACLE_DPS):
        y, i_min, i_max, sigma = mpf(y), mpf(i_min), mpf(i_max), mpf(sigma)
        return i_min + (i_max - i_min) / 2 * (1 + erf_oracle(y / (mpmath.sqrt(2) * sigma)))


def gradient_ratio_oracle(sigma, reblur) -> mpf:
    with mp.workdps(ORACLE_DPS):
        sigma, reblur = mpf(sigma), mpf(reblur)
        return mpmath.sqrt((sigma ** 2 + reblur ** 2) / sigma ** 2)


def discrete_gradient_ratio_oracle(sigma, reblur) -> mpf:
    with mp.workdps(ORACLE_DPS):
        sigma, reblur = mpf(sigma), mpf(reblur)
        num = erf_oracle(1 / (mpmath.sqrt(2) * sigma))
        den = erf_oracle(1 / mpmath.sqrt(2 * (sigma ** 2 + reblur ** 2)))
        return num / den


def span_ratio_oracle(sigma) -> mpf:
    with mp.workdps(ORACLE_DPS):
        sigma = mpf(sigma)
        return erf_oracle(mpmath.sqrt(2) / sigma) / erf_oracle(1 / (mpmath.sqrt(2) * sigma))


def continuous_inversion_error_oracle(sigma, reblur) -> mpf:
    with mp.workdps(ORACLE_DPS):
        sigma, reblur = mpf(sigma), mpf(reblur)
        r = discrete_gradient_ratio_oracle(sigma, reblur)
        recovered = reblur / mpmath.sqrt(r ** 2 - 1)
        return abs(recovered / sigma - 1)


def gauss_cdf_oracle(x) -> mpf:
    """Standard normal CDF via the erf oracle."""
    with mp.workdps(ORACLE_DPS):
        x = mpf(x)
        return (1 + erf_oracle(x / mpmath.sqrt(2))) / 2
