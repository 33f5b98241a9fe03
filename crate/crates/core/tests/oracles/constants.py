"""Independent extended-precision evaluation of the bound constants.

Prints the values frozen into tests/constants.rs. Run with:
    python3 crates/core/tests/oracles/constants.py
"""
from mpmath import mp, mpf, pi, sqrt, log

mp.dps = 40


def sphere_area(n):
    # Surface area of the unit sphere in R^n: 2 pi^(n/2) / Gamma(n/2).
    return 2 * pi ** (mpf(n) / 2) / mp.gamma(mpf(n) / 2)


def constants(n, k, rho, R, p_min):
    A = sphere_area(n)
    beta = 16 * pi**2 * rho * R / p_min + (4 + 8 * pi * R) * A * rho
    L = 8 * pi**2 * rho / p_min + 8 * pi * A * rho
    return {
        "sphere_area": A,
        "beta": beta,
        "lipschitz": L,
        "kappa1": 4 * beta,
        "kappa2": beta * sqrt(2 * n),
        "zeta0": 64 * pi**2 * (n + 1) * rho / p_min,
        "zeta1": 8 * sqrt(2 * n) * pi**2 * rho / p_min,
        "a_cap": 4 * pi * A * rho,
        "b_cap": (2 + 4 * pi * R) * A * rho,
    }


def c_cap(n, rho, p_min, m):
    return 8 * pi**2 * rho / (m * p_min)


def rhs(n, k, rho, R, p_min, m, delta):
    c = constants(n, k, rho, R, p_min)
    m = mpf(m)
    f = (1 + c["kappa1"] * sqrt(log(2 / delta)) + c["kappa2"] * sqrt(log(2 * (1 + 2 * R * c["lipschitz"] * sqrt(m))))) / sqrt(m)
    g2 = (c["zeta0"] * sqrt(log(m + 1)) + c["zeta1"] * sqrt(log(2 * n / delta))) / sqrt(m)
    ginf = (8 * pi**2 * rho / p_min) * (8 * sqrt((n + 1) * log(m + 1)) + sqrt(2 * log(n / delta))) / sqrt(m)
    return f, g2, ginf


def show(label, v):
    print(f"{label:>24} = {mp.nstr(v, 20)}")


if __name__ == "__main__":
    for n in range(1, 8):
        show(f"A_{n - 1}", sphere_area(n))
    cert = (1, 4, mpf(2), mpf(1), mpf(1) / 4)
    for key, v in constants(*cert).items():
        show(key, v)
    show("c_cap(100)", c_cap(1, mpf(2), mpf(1) / 4, 100))
    delta = mpf(1) / 10
    for m in (16, 100, 512, 4096):
        f, g2, ginf = rhs(*cert, m, delta)
        show(f"rhs_f({m})", f)
        show(f"rhs_g2({m})", g2)
        show(f"rhs_ginf({m})", ginf)
    cert3 = (3, 6, mpf("0.75"), mpf("1.5"), mpf("0.01"))
    for key, v in constants(*cert3).items():
        show(f"n3 {key}", v)
    f, g2, ginf = rhs(*cert3, 1000, mpf("0.05"))
    show("n3 rhs_f(1000)", f)
    show("n3 rhs_g2(1000)", g2)
    show("n3 rhs_ginf(1000)", ginf)
