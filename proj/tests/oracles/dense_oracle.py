"""Dense full-space reference computations (no sector decomposition).

Used only to freeze expected values for the C++ test-suite.
"""
import numpy as np
from scipy.linalg import expm, eigh


def spin_ops(two_s):
    s = two_s / 2.0
    m = np.arange(-s, s + 1)
    dim = two_s + 1
    sp = np.zeros((dim, dim), complex)
    for i in range(dim - 1):
        sp[i + 1, i] = np.sqrt(s * (s + 1) - m[i] * (m[i] + 1))
    sm = sp.conj().T
    sz = np.diag(m).astype(complex)
    return sp, sm, sz


def field_ops(nmax):
    a = np.diag(np.sqrt(np.arange(1, nmax + 1)), 1).astype(complex)
    return a


def hamiltonian(two_s, nmax):
    sp, sm, sz = spin_ops(two_s)
    a = field_ops(nmax)
    return np.kron(sp, a) + np.kron(sm, a.conj().T)


def coherent(alpha, nmax):
    from math import lgamma
    n = np.arange(nmax + 1)
    logamp = -abs(alpha) ** 2 / 2 + n * np.log(abs(alpha) if alpha != 0 else 1.0) - 0.5 * np.array([lgamma(k + 1) for k in n])
    c = np.exp(logamp) * np.exp(1j * np.angle(alpha) * n)
    if alpha == 0:
        c = np.zeros(nmax + 1, complex); c[0] = 1
    return c / np.linalg.norm(c)


def reduced_atom(psi, two_s, nmax):
    m = psi.reshape(two_s + 1, nmax + 1)
    return m @ m.conj().T


def spin_stats(rho, two_s):
    sp, sm, sz = spin_ops(two_s)
    sx = (sp + sm) / 2
    sy = (sp - sm) / 2j
    ops = [sx, sy, sz]
    mean = np.array([np.trace(rho @ o).real for o in ops])
    cov = np.zeros((3, 3))
    for i in range(3):
        for j in range(3):
            cov[i, j] = (np.trace(rho @ (ops[i] @ ops[j] + ops[j] @ ops[i])).real / 2 - mean[i] * mean[j])
    n = mean / np.linalg.norm(mean)
    t = np.array([1.0, 0, 0]) if abs(n[0]) < 0.9 else np.array([0, 1.0, 0])
    e1 = t - n * (t @ n); e1 /= np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    c2 = np.array([[e1 @ cov @ e1, e1 @ cov @ e2], [e2 @ cov @ e1, e2 @ cov @ e2]])
    lam = np.linalg.eigvalsh(c2)
    return mean, lam


def stage1(two_s, alpha, taus, nmax):
    H = hamiltonian(two_s, nmax)
    w, v = eigh(H)
    atom = np.zeros(two_s + 1, complex); atom[-1] = 1
    psi0 = np.kron(atom, coherent(alpha, nmax))
    c = v.conj().T @ psi0
    out = []
    for t in taus:
        psi = v @ (np.exp(-1j * w * t) * c)
        rho = reduced_atom(psi, two_s, nmax)
        mean, lam = spin_stats(rho, two_s)
        out.append((t, np.linalg.norm(mean), lam[0], lam[1]))
    return out


def zeta_min(two_s, alpha, nmax, floor_fraction=0.4, grid=np.linspace(0.0, 3.0, 61)):
    """Smallest lambda_min / (|<S>|/2) over tau, with |<S>| >= floor."""
    from scipy.optimize import minimize_scalar
    s = two_s / 2.0

    def zeta(t):
        _, length, lmin, _ = stage1(two_s, alpha, [t], nmax)[0]
        return max(lmin, 0.0) / (length / 2) if length >= floor_fraction * s else np.inf

    vals = [zeta(t) for t in grid]
    j = int(np.argmin(vals))
    lo, hi = grid[max(j - 1, 0)], grid[min(j + 1, len(grid) - 1)]
    res = minimize_scalar(zeta, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    return (res.x, res.fun) if res.fun < vals[j] else (grid[j], vals[j])


def purity(two_s, alpha, tau, nmax):
    H = hamiltonian(two_s, nmax)
    atom = np.zeros(two_s + 1, complex); atom[-1] = 1
    psi = expm(-1j * H * tau) @ np.kron(atom, coherent(alpha, nmax))
    rho = reduced_atom(psi, two_s, nmax)
    return np.trace(rho @ rho).real


def radiated(two_s, theta, taus):
    """Bloch state |theta, 0> radiating into vacuum: (<a>, <a^dag a>) per tau."""
    nmax = two_s + 1
    H = hamiltonian(two_s, nmax)
    sp, sm, sz = spin_ops(two_s)
    sy = (sp - sm) / 2j
    top = np.zeros(two_s + 1, complex); top[-1] = 1
    bloch = expm(-1j * theta * sy) @ top
    vac = np.zeros(nmax + 1, complex); vac[0] = 1
    psi0 = np.kron(bloch, vac)
    a = np.kron(np.eye(two_s + 1), field_ops(nmax))
    out = []
    for t in taus:
        psi = expm(-1j * H * t) @ psi0
        out.append((psi.conj() @ a @ psi, (psi.conj() @ a.conj().T @ a @ psi).real))
    return out


if __name__ == "__main__":
    np.set_printoptions(precision=17)
    print("zeta_min N=2 alpha=1.5:", repr(zeta_min(2, 1.5, 40)))
    print("purity S=5 alpha=2 tau=1:", repr(purity(10, 2.0, 1.0, 40)))
    for t, (amp, n) in zip([0.5, 1.0], radiated(6, 2 * np.pi / 3, [0.5, 1.0])):
        print(f"N=6 theta=2pi/3 tau={t}: a={amp!r} n={n!r}")
