"""High-precision evaluation of the LSH closed forms; prints the pinned values
used by tests/test_lsh.cpp. Independent of the C++ code (mpmath only)."""
import mpmath as mp

mp.mp.dps = 40


def alpha(s):
    return 1 - s * s / 2


def beta(s):
    return mp.sqrt(1 - alpha(s) ** 2)


def tail(eta):
    return mp.erfc(eta / mp.sqrt(2)) / 2


def inv_tail(logp):
    return mp.findroot(lambda e: mp.log(tail(e)) - logp, 1)


def G(s, eta, sig):
    rho = alpha(s)
    q = mp.sqrt(1 - rho * rho)
    f = lambda x: mp.npdf(x) * tail((sig - rho * x) / q)
    # Fine subdivision near the lower limit: the integrand is sharply peaked
    # there when eta is large.
    return mp.quad(f, mp.linspace(eta, eta + 3, 60) + [eta + 8, mp.inf])


def solve(r, eps, n):
    r, c = mp.mpf(r), 1 + mp.mpf(eps)
    st = beta(c * r) / (alpha(r) - alpha(c * r))
    tau = st * st
    sigma = alpha(r) ** 2 * tau
    K = max(1, int(mp.ceil(mp.sqrt(mp.log(n)))))
    eu = inv_tail(-sigma * mp.log(n) / K)
    eq = inv_tail(-tau * mp.log(n) / K)
    lg = mp.log(G(r, eu, eq))
    return dict(tau=tau, sigma=sigma, K=K, eta_u=eu, eta_q=eq, log_G=lg, log_T=mp.log(3) - K * lg)


if __name__ == "__main__":
    for k, v in solve("0.1", "0.5", 1024).items():
        print(k, mp.nstr(v, 17))
    print("G(1,1,1)", mp.nstr(G(1, 1, 1), 17))
    print("G(0.5,0.3,-0.2)", mp.nstr(G(mp.mpf("0.5"), mp.mpf("0.3"), mp.mpf("-0.2")), 17))
    print("G(1.9,2,2.5)", mp.nstr(G(mp.mpf("1.9"), 2, mp.mpf("2.5")), 17))
    print("F(1)", mp.nstr(tail(1), 17))
    print("logF(30)", mp.nstr(mp.log(tail(30)), 17))
