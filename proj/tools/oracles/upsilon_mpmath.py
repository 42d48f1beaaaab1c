"""High-precision reference values for log Upsilon_{gamma/2} and log Gamma.

Evaluates the defining integral with mpmath (tanh-sinh on split intervals,
40 significant digits). Used to freeze reference values into the unit tests
and to validate data/dozz_golden.csv. Independent of the C++ quadrature.
"""
import sys
import mpmath as mp

mp.mp.dps = 40


def log_upsilon(z, gamma):
    gamma = mp.mpf(gamma)
    Q = 2 / gamma + gamma / 2
    a = Q / 2 - mp.mpc(z)

    def f(t):
        if t == 0:
            return -a * a
        return (a * a * mp.e ** (-t) - mp.sinh(a * t / 2) ** 2 /
                (mp.sinh(t * gamma / 4) * mp.sinh(t / gamma))) / t

    pts = [0, 0.5, 1, 2, 4, 8, 16, 32, 64, 128, 256, mp.inf]
    return mp.quad(f, pts)


def main():
    cases = [(1.0, 0.7), (1.0, 1.25), (1.0, mp.mpc(0.9, 0.8)), (1.0, mp.mpc(1.4, -2.5)),
             (mp.sqrt(2), mp.mpc(1.0, 3.0)), (0.8, 1.1), (1.8, mp.mpc(1.2, 0.4)),
             (1.0, mp.mpc(2.0, 6.0))]
    for g, z in cases:
        v = log_upsilon(z, g)
        print(f"gamma={mp.nstr(g,17)} z={mp.nstr(mp.mpc(z),17)} logU={mp.nstr(v, 20)}")
    for z in [mp.mpc(0.3, 0.0), mp.mpc(2.5, 1.5), mp.mpc(-1.3, 0.7), mp.mpc(0.5, 12.0)]:
        print(f"loggamma z={mp.nstr(z,17)} = {mp.nstr(mp.loggamma(z), 20)}")


if __name__ == "__main__":
    sys.exit(main())
