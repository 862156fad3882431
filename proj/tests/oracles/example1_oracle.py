"""Independent reference runs of the benchmark error dynamics E' = A E + W.

Uses scipy's DOP853 (8th order) with a step cap of one eighth of the local
oscillation period and tight tolerances, then reports sup ||E(t)|| over the
final 10% of the horizon. The acceptance thresholds in the C++ suite are
fixed from these numbers.
"""
import numpy as np
from scipy.integrate import solve_ivp

A = np.array([[-1.0, 2.0], [0.0, -1.5]])
E0 = np.array([-1.0, 1.5])


def unbounded(t, e):
    ph = t ** 4
    return A @ e + np.array([0.5 * t * np.sin(ph), -t * np.cos(ph)])


def bounded(t, e):
    s = np.exp(t)
    return A @ e + np.array([-e[1] * np.sin(s), 2.0 * (np.cbrt(e[0]) + e[1] + 1.0) * np.cos(s)])


def run(rhs, omega, t_end, chunk=0.25):
    t, e = 0.0, E0.copy()
    sup = 0.0
    while t < t_end - 1e-12:
        t1 = min(t + chunk, t_end)
        cap = 2 * np.pi / max(omega(t1), 1e-9) / 8
        sol = solve_ivp(rhs, (t, t1), e, method="DOP853", rtol=1e-11, atol=1e-12, max_step=cap, dense_output=True)
        if t1 > 0.9 * t_end:
            ts = np.linspace(max(t, 0.9 * t_end), t1, 2001)
            sup = max(sup, np.linalg.norm(sol.sol(ts), axis=0).max())
        t, e = t1, sol.y[:, -1]
    return sup, np.linalg.norm(e)


if __name__ == "__main__":
    su, eu = run(unbounded, lambda t: 4 * t ** 3, 20.0)
    print(f"unbounded: sup_final10={su:.6e} terminal={eu:.6e}")
    sb, eb = run(bounded, np.exp, 10.0)
    print(f"bounded:   sup_final10={sb:.6e} terminal={eb:.6e}")
