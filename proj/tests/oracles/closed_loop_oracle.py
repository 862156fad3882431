"""Reference runs for the closed-loop and tracking simulator checks.

Chain model m = 1, n = 2, F = u, gamma = 1, A_H = -1. The synthesized
feedback is u = -x1 - 2 x2 - y_d'' terms, so the loop in Delta is
Delta1' = Delta2, Delta2' = -Delta1 - 2 Delta2 + w(t). With w = cos(e^t) on
the second channel the state is driven by a diminishing input. Reports
sup ||Delta|| over [9, 10] and the terminal norm; thresholds in the C++
suite are fixed from these numbers.
"""
import numpy as np
from scipy.integrate import solve_ivp


def rhs(t, x):
    return [x[1], -x[0] - 2.0 * x[1] + np.cos(np.exp(t))]


def run(x0, t_end=10.0, chunk=0.25):
    t, x = 0.0, np.array(x0, dtype=float)
    sup = 0.0
    while t < t_end - 1e-12:
        t1 = min(t + chunk, t_end)
        cap = 2 * np.pi / np.exp(t1) / 8
        sol = solve_ivp(rhs, (t, t1), x, method="DOP853", rtol=1e-11, atol=1e-12, max_step=cap, dense_output=True)
        if t1 > 0.9 * t_end:
            ts = np.linspace(max(t, 0.9 * t_end), t1, 2001)
            sup = max(sup, np.linalg.norm(sol.sol(ts), axis=0).max())
        t, x = t1, sol.y[:, -1]
    return sup, np.linalg.norm(x)


if __name__ == "__main__":
    for x0 in ([0.5, 0.0], [0.3, 0.0]):
        s, e = run(x0)
        print(f"x0={x0}: sup_final10={s:.6e} terminal={e:.6e}")
