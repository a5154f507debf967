"""Independent high-precision values frozen into the Rust tests.

Run: python3 oracles/constants.py > oracles/constants.txt
"""
from mpmath import mp, mpf, zeta, pi, log, cbrt, sqrt

mp.dps = 40


def c_star():
    return cbrt(2 * pi) * zeta(mpf(3) / 2) ** (mpf(5) / 3) / (3 * zeta(mpf(5) / 2))


def constants(b0, eta):
    b0, eta = mpf(b0), mpf(eta)
    alpha = (1 - 4 * eta) / 10
    tt = mpf(2) / 3
    a = (4 * b0 ** (mpf(-4) / 7) / (1 - tt ** (alpha / 4))) ** (mpf(7) / 3)
    b = (1 - tt ** alpha) * alpha * log(mpf(3) / 2) / 8
    c = b0 / 174 * a ** (mpf(3) / 2)
    return alpha, a, b, c


print("c_star", mp.nstr(c_star(), 25))
print("n0(ratio=1/2, N=1)", mp.nstr(1 - mpf(1) / 2 ** (mpf(3) / 5), 25))
for b0, eta in [("0.5", "0")] + [(b, e) for b in ("0.1", "0.3", "0.4", "0.5") for e in ("0", "0.1", "0.2")]:
    alpha, a, b, c = constants(b0, eta)
    print(f"b0={b0} eta={eta} alpha={mp.nstr(alpha, 20)} A*={mp.nstr(a, 25)} B*={mp.nstr(b, 25)} C*={mp.nstr(c, 25)}")
