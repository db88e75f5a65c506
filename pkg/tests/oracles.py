"""Reference values computed without touching the package internals.

Everything here is plain numpy/scipy: closed forms, image sums, exact
Fourier propagation and a brute-force log-Sobolev minimizer.
"""
import numpy as np
from scipy.special import i0


def nodes(n, period=2 * np.pi):
    return np.arange(n) * period / n


def wrapped_heat_kernel(x, t, period, center=0.0, images=None):
    """(4 pi t)^(-1/2) sum_k exp(-(x - c + kL)^2 / 4t) on the circle of length L."""
    if images is None:
        images = 2 + int(np.ceil(6 * np.sqrt(t) / period))
    d = np.asarray(x) - center
    total = sum(np.exp(-(d + k * period) ** 2 / (4 * t)) for k in range(-images, images + 1))
    return total / np.sqrt(4 * np.pi * t)


def fourier_heat(u0, period, t):
    """Exact flat heat propagation e^{t d^2/dx^2} of the trigonometric interpolant of u0."""
    n = len(u0)
    k = 2 * np.pi / period * np.fft.rfftfreq(n, 1.0 / n)
    return np.fft.irfft(np.fft.rfft(u0) * np.exp(-k ** 2 * t), n)


def gaussian_entropy(t):
    """-int G log G dx for the Euclidean heat kernel G at time t in one dimension."""
    return 0.5 * (1 + np.log(4 * np.pi * t))


def bessel_mass():
    """int_0^{2 pi} exp(-sin x) dx."""
    return 2 * np.pi * i0(1.0)


# -- symbolic one-dimensional tensors ------------------------------------------

def bakry_emery_m_1d(x, eps, m):
    """Ric_{m,1}(L) on flat T^1 for phi = eps sin x (Ric vanishes in dimension one)."""
    return -eps * np.sin(x) - (eps * np.cos(x)) ** 2 / (m - 1)


def witten_sin_cos(x):
    """L cos x on flat T^1 with phi = sin x."""
    return -np.cos(x) + np.sin(x) * np.cos(x)


def surface_gaussian_curvature(dpsi, d2psi):
    """K = -f''/f for the surface dx^2 + f(x)^2 dtheta^2 with f = exp(-psi); Ric = K g there."""
    return d2psi - dpsi ** 2


def spectral_d(values, period):
    """Plain FFT derivative of periodic samples (Nyquist dropped)."""
    n = len(values)
    k = 2 * np.pi / period * np.fft.rfftfreq(n, 1.0 / n)
    k[-1] = 0.0
    return np.fft.irfft(1j * k * np.fft.rfft(values), n)


# -- brute-force log-Sobolev minimizer -----------------------------------------

def interpolation_matrices(n, period, factor=3):
    """Values and derivative of the trigonometric interpolant of n nodes on a grid ``factor`` times finer.

    The Nyquist coefficient is split evenly between +n/2 and -n/2, which
    makes the interpolant real and its derivative well defined.
    """
    fine = factor * n
    eye = np.fft.fft(np.eye(n), axis=0)
    spec = np.zeros((fine, n), dtype=complex)
    h = n // 2
    spec[:h] = eye[:h]
    spec[-h + 1:] = eye[h + 1:]
    spec[h] = spec[-h] = 0.5 * eye[h]
    k = 2 * np.pi / period * np.fft.fftfreq(fine, 1.0 / fine)
    P = factor * np.real(np.fft.ifft(spec, axis=0))
    DP = factor * np.real(np.fft.ifft(1j * k[:, None] * spec, axis=0))
    return P, DP


class LogSobolevOracle:
    """Projected gradient descent for

        min int [a kappa |w'|^2 + V w^2 - w^2 log w^2 - c w^2] rho dx   s.t.  int w^2 rho dx = 1

    on a one-dimensional periodic grid with node weights rho (including any
    sqrt det g) and kappa = g^{-1}.  The Dirichlet energy of the
    trigonometric interpolant is integrated exactly on a 3x finer grid; the
    other terms use node quadrature.  The linear part is implicit and the
    multiplier explicit, so fixed points solve the Euler-Lagrange equation.
    """

    def __init__(self, period, rho, kappa, a, c, V=None):
        self.n = len(rho)
        self.h = period / self.n
        self.rho = np.asarray(rho, float)
        self.a, self.c = float(a), float(c)
        self.V = np.zeros(self.n) if V is None else np.asarray(V, float)
        P, DP = interpolation_matrices(self.n, period)
        coef = P @ (self.rho * np.asarray(kappa, float))
        self.S = DP.T @ (coef[:, None] * DP) / P.shape[0] * self.n

    def normalize(self, w):
        return w / np.sqrt(self.h * np.sum(self.rho * w * w))

    def _F(self, w):
        return w * np.log(np.maximum(w * w, 1e-300)) + (1 + self.c) * w

    def value(self, w):
        w2 = w * w
        logs = np.log(np.maximum(w2, 1e-300))
        return self.h * (self.a * w @ self.S @ w + np.sum(self.rho * (self.V * w2 - w2 * logs - self.c * w2)))

    def descend(self, w, step=0.05, iters=100000, tol=1e-15):
        A = self.a * self.S + np.diag(self.rho * self.V)
        Minv = np.linalg.inv(np.diag(self.rho) + step * A)
        w = self.normalize(np.abs(w))
        val = self.value(w)
        for _ in range(iters):
            E = A @ w / self.rho - self._F(w)
            lam = self.h * np.sum(self.rho * w * E)
            w = self.normalize(np.abs(Minv @ (self.rho * (w + step * (self._F(w) + lam * w)))))
            new = self.value(w)
            if abs(new - val) < tol:
                return w, new
            val = new
        return w, val

    def minimize(self, restarts=4, seed=1, **kw):
        rng = np.random.default_rng(seed)
        x = np.arange(self.n) * 2 * np.pi / self.n
        starts = [np.ones(self.n)]
        for _ in range(restarts):
            amps = rng.normal(size=(3, 2))
            s = sum(a * np.cos((j + 1) * x) + b * np.sin((j + 1) * x) for j, (a, b) in enumerate(amps))
            starts.append(np.exp(s))
        best = min((self.descend(s0, **kw) for s0 in starts), key=lambda r: r[1])
        return best[1], best[0]
