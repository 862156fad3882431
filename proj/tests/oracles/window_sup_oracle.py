"""Closed-form oracle for windowed running-integral suprema.

cos(e^s): int cos(e^s) ds = Ci(e^s)
t cos(t^4): int s cos(s^4) ds = sqrt(2 pi)/4 * C(s^2 sqrt(2/pi))   (Fresnel C)
sin: 1 - cos(lambda)

The sup over lambda in [0, 1] is taken on a dense grid and polished with a
bounded scalar minimiser.  Values printed with 17 significant digits are
frozen into the C++ tests.
"""
import numpy as np
from scipy.special import sici, fresnel
from scipy.optimize import minimize_scalar


def ci(x):
    return sici(x)[1]


def si(x):
    return sici(x)[0]


def running_cos_exp(t, lam):
    return ci(np.exp(t + lam)) - ci(np.exp(t))


def running_sin_exp(t, lam):
    return si(np.exp(t + lam)) - si(np.exp(t))


def running_t_cos_t4(t, lam):
    k = np.sqrt(2.0 / np.pi)
    c = lambda s: fresnel(s * s * k)[1]
    return np.sqrt(2.0 * np.pi) / 4.0 * (c(t + lam) - c(t))


def running_t_sin_t4(t, lam):
    k = np.sqrt(2.0 / np.pi)
    s_ = lambda s: fresnel(s * s * k)[0]
    return np.sqrt(2.0 * np.pi) / 4.0 * (s_(t + lam) - s_(t))


def sup(f, t, points=2_000_001):
    lam = np.linspace(0.0, 1.0, points)
    v = f(t, lam)
    k = int(np.argmax(v))
    lo = lam[max(k - 1, 0)]
    hi = lam[min(k + 1, points - 1)]
    r = minimize_scalar(lambda x: -f(t, x), bounds=(lo, hi), method="bounded",
                        options={"xatol": 1e-14})
    return max(v[k], -r.fun)


if __name__ == "__main__":
    print("cos_exp (scalar, abs)")
    for t in range(0, 9):
        val = sup(lambda t, l: np.abs(running_cos_exp(t, l)), t)
        print(f"  {t} {val:.17g} bound {4*np.exp(-t):.6g}")
    print("vec_cos_sin_exp (euclidean)")
    for t in range(0, 9):
        f = lambda t, l: np.hypot(running_cos_exp(t, l), running_sin_exp(t, l))
        val = sup(f, t)
        print(f"  {t} {val:.17g} bound {np.sqrt(32)*np.exp(-t):.6g}")
    print("t_cos_t4 (abs)")
    for t in range(1, 11):
        val = sup(lambda t, l: np.abs(running_t_cos_t4(t, l)), t)
        print(f"  {t} {val:.17g}")
    print("vec_t_cos_sin_t4 (euclidean)")
    for t in range(1, 11):
        f = lambda t, l: np.hypot(running_t_cos_t4(t, l), running_t_sin_t4(t, l))
        print(f"  {t} {sup(f, t):.17g}")
    print("sin at 0:", f"{1-np.cos(1.0):.17g}")
