"""Built-in example targets, registered by stable string names.

Every density here is written as a module-level class so that models pickle
cleanly into worker processes. Synthetic data sets are regenerated from the
fixed seeds below on every build.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import expit, log_expit

from .constraints import Constraint, L1Norm, L2Norm, Linear, NonlinearAffine
from .errors import UnknownExample
from .oracles import truncated_normal_moments
from .target import TargetModel

AR1_SEED = 20230101
MIXTURE_SEED = 20230102
LOGREG_SEED = 20230103
NNET_SEED = 20230104
MTP2_SEED = 20230105
VAR_SEED = 20230106

FD_STEP = 1e-7


# --------------------------------------------------------------------------
# small picklable building blocks
# --------------------------------------------------------------------------

class Coordinate:
    def __init__(self, i: int):
        self.i = i

    def __call__(self, q):
        return q[self.i]


class Product:
    def __init__(self, i: int, j: int):
        self.i, self.j = i, j

    def __call__(self, q):
        return q[self.i] * q[self.j]


class Gaussian:
    """``N(mean, cov)`` log kernel with an exact sampler."""

    def __init__(self, mean, cov):
        self.mean = np.asarray(mean, dtype=float)
        self.cov = np.atleast_2d(np.asarray(cov, dtype=float))
        self.prec = np.linalg.inv(self.cov)
        self.chol = np.linalg.cholesky(self.cov)

    def log_density(self, q):
        r = q - self.mean
        return -0.5 * float(r @ self.prec @ r)

    def grad(self, q):
        return -(self.prec @ (q - self.mean))

    def sample(self, rng, n):
        z = rng.standard_normal((n, self.mean.size))
        return self.mean + z @ self.chol.T

    def model(self, monitors=(), names=(), params=()) -> TargetModel:
        return TargetModel(self.mean.size, self.log_density, self.grad, tuple(monitors), tuple(names), tuple(params))


class DiagonalQuadraticF:
    """``F(w) = const - sum_i coef_i * w_i**2``."""

    def __init__(self, const: float, coefs):
        self.const = float(const)
        self.coefs = np.asarray(coefs, dtype=float)

    def __call__(self, w):
        w = np.asarray(w, dtype=float)
        return self.const - (self.coefs * w * w).sum(axis=-1)

    def grad(self, w):
        return -2.0 * self.coefs * np.asarray(w, dtype=float)


class SpectralRadiusF:
    """``F(w) = 1 - rho(B(w))`` where ``w`` fills positions ``(rows, cols)`` of ``base``.

    The gradient is a central finite difference of ``F`` with step ``1e-7``.
    """

    def __init__(self, base, rows, cols):
        self.base = np.asarray(base, dtype=float)
        self.rows = np.asarray(rows, dtype=int)
        self.cols = np.asarray(cols, dtype=int)

    def matrix(self, w):
        w = np.asarray(w, dtype=float)
        B = np.broadcast_to(self.base, w.shape[:-1] + self.base.shape).copy()
        B[..., self.rows, self.cols] = w
        return B

    def rho(self, w):
        return np.abs(np.linalg.eigvals(self.matrix(w))).max(axis=-1)

    def __call__(self, w):
        return 1.0 - self.rho(w)

    def grad(self, w):
        w = np.asarray(w, dtype=float)
        k = w.size
        E = np.eye(k) * FD_STEP
        vals = self(np.concatenate([w + E, w - E]))
        return (vals[:k] - vals[k:]) / (2.0 * FD_STEP)


# --------------------------------------------------------------------------
# reparametrizations for the transformed twins
# --------------------------------------------------------------------------

class Elementwise:
    """Coordinatewise maps from unconstrained to original parameters.

    ``kinds[i]`` is ``"id"``, ``"exp"`` (original = exp) or ``"expit"``.
    """

    def __init__(self, kinds: Sequence[str]):
        self.kinds = tuple(kinds)

    def forward(self, u):
        q = np.array(u, dtype=float)
        for i, k in enumerate(self.kinds):
            if k == "exp":
                q[..., i] = np.exp(u[..., i])
            elif k == "expit":
                q[..., i] = expit(u[..., i])
        return q

    def log_jac(self, u) -> float:
        s = 0.0
        for i, k in enumerate(self.kinds):
            if k == "exp":
                s += u[i]
            elif k == "expit":
                s += float(log_expit(u[i]) + log_expit(-u[i]))
        return s

    def pullback(self, u, g):
        """Gradient in ``u`` of ``log pi(forward(u)) + log_jac(u)`` given ``g = grad log pi``."""
        out = np.array(g, dtype=float)
        for i, k in enumerate(self.kinds):
            if k == "exp":
                out[i] = g[i] * math.exp(u[i]) + 1.0
            elif k == "expit":
                p = float(expit(u[i]))
                out[i] = g[i] * p * (1.0 - p) + (1.0 - 2.0 * p)
        return out


class OrderedPair:
    """``(a, log(b - a), rest...) -> (a, b, rest...)`` for the first two coordinates."""

    def forward(self, u):
        q = np.array(u, dtype=float)
        q[..., 1] = u[..., 0] + np.exp(u[..., 1])
        return q

    def log_jac(self, u) -> float:
        return float(u[1])

    def pullback(self, u, g):
        out = np.array(g, dtype=float)
        out[0] = g[0] + g[1]
        out[1] = g[1] * math.exp(u[1]) + 1.0
        return out


class Reparametrized:
    """Density of ``u`` when ``q = forward(u)`` follows ``base``."""

    def __init__(self, base, transform):
        self.base = base
        self.transform = transform

    def log_density(self, u):
        return self.base.log_density(self.transform.forward(u)) + self.transform.log_jac(u)

    def grad(self, u):
        return self.transform.pullback(u, self.base.grad(self.transform.forward(u)))


class ParamMonitor:
    """``k``-th reported parameter of ``owner``, optionally after a reparametrization."""

    def __init__(self, owner, k: int, transform=None):
        self.owner = owner
        self.k = k
        self.transform = transform

    def __call__(self, q):
        if self.transform is not None:
            q = self.transform.forward(q)
        return self.owner.params(q)[self.k]


# --------------------------------------------------------------------------
# toy posteriors (q = original parameters, with log sigma)
# --------------------------------------------------------------------------

class IidGaussianPosterior:
    """``y_i ~ N(mu, sigma^2)``, flat prior on ``mu > 0``, ``Exp(1)`` on sigma; ``q = (mu, log sigma)``."""

    param_names = ("mu", "sigma")

    def __init__(self, y):
        self.y = np.asarray(y, dtype=float)
        self.n = self.y.size

    def log_density(self, q):
        mu, s = q[0], q[1]
        sig = math.exp(s)
        r = self.y - mu
        return -self.n * s - float(r @ r) / (2.0 * sig * sig) - sig + s

    def grad(self, q):
        mu, s = q[0], q[1]
        sig = math.exp(s)
        r = self.y - mu
        inv2 = 1.0 / (sig * sig)
        return np.array([r.sum() * inv2, -self.n + float(r @ r) * inv2 - sig + 1.0])

    def params(self, q):
        return (q[0], math.exp(q[1]))


class AR1Posterior:
    """Conditional AR(1) likelihood for ``t = 2..n``, uniform prior on phi, ``Exp(1)`` on sigma."""

    param_names = ("phi", "sigma")

    def __init__(self, y):
        y = np.asarray(y, dtype=float)
        self.x = y[:-1]
        self.z = y[1:]
        self.m = self.z.size

    def log_density(self, q):
        phi, s = q[0], q[1]
        sig = math.exp(s)
        e = self.z - phi * self.x
        return -self.m * s - float(e @ e) / (2.0 * sig * sig) - sig + s

    def grad(self, q):
        phi, s = q[0], q[1]
        sig = math.exp(s)
        e = self.z - phi * self.x
        inv2 = 1.0 / (sig * sig)
        return np.array([float(e @ self.x) * inv2, -self.m + float(e @ e) * inv2 - sig + 1.0])

    def params(self, q):
        return (q[0], math.exp(q[1]))


class MixturePosterior:
    """Equal-weight two-component mixture, flat priors on the means, ``Exp(1)`` on sigma.

    ``q = (mu1, mu2, log sigma)``; the ordering ``mu1 <= mu2`` is imposed as a constraint.
    """

    param_names = ("mu1", "mu2", "sigma")

    def __init__(self, y):
        self.y = np.asarray(y, dtype=float)
        self.n = self.y.size

    def _parts(self, q):
        sig = math.exp(q[2])
        a = -0.5 * ((self.y - q[0]) / sig) ** 2
        b = -0.5 * ((self.y - q[1]) / sig) ** 2
        return sig, a, b

    def log_density(self, q):
        sig, a, b = self._parts(q)
        ll = float(np.logaddexp(a, b).sum()) - self.n * q[2]
        return ll - sig + q[2]

    def grad(self, q):
        sig, a, b = self._parts(q)
        w1 = expit(a - b)
        w2 = 1.0 - w1
        r1 = self.y - q[0]
        r2 = self.y - q[1]
        inv2 = 1.0 / (sig * sig)
        g0 = float(w1 @ r1) * inv2
        g1 = float(w2 @ r2) * inv2
        gs = -self.n + float(w1 @ (r1 * r1) + w2 @ (r2 * r2)) * inv2 - sig + 1.0
        return np.array([g0, g1, gs])

    def params(self, q):
        return (q[0], q[1], math.exp(q[2]))


# --------------------------------------------------------------------------
# larger synthetic-data models
# --------------------------------------------------------------------------

class LogisticPosterior:
    """Logistic regression with ``N(0, prior_sd^2)`` priors; ``q = (delta, beta)``."""

    def __init__(self, X, y, prior_sd: float = 10.0):
        self.X1 = np.column_stack([np.ones(len(y)), np.asarray(X, dtype=float)])
        self.y = np.asarray(y, dtype=float)
        self.inv_var = 1.0 / prior_sd**2

    def log_density(self, q):
        eta = self.X1 @ q
        return float(self.y @ eta - np.logaddexp(0.0, eta).sum()) - 0.5 * self.inv_var * float(q @ q)

    def grad(self, q):
        eta = self.X1 @ q
        return self.X1.T @ (self.y - expit(eta)) - self.inv_var * q


class NeuralNetPosterior:
    """Single-hidden-layer regression net with ``g(x) = tanh(x/2)``.

    ``q = (alpha, w_1..w_J, delta_1..delta_J, beta_1..beta_J, log sigma)`` with
    ``N(0, 1)`` priors on everything except sigma, which gets ``Exp(1)``.
    """

    def __init__(self, X, y, J: int):
        self.X = np.asarray(X, dtype=float)
        self.y = np.asarray(y, dtype=float)
        self.n, self.p = self.X.shape
        self.J = J
        self.dim = 1 + 2 * J + J * self.p + 1

    def unpack(self, q):
        J, p = self.J, self.p
        alpha = q[0]
        w = q[1 : 1 + J]
        delta = q[1 + J : 1 + 2 * J]
        beta = q[1 + 2 * J : 1 + 2 * J + J * p].reshape(J, p)
        return alpha, w, delta, beta, q[-1]

    def _forward(self, q):
        alpha, w, delta, beta, s = self.unpack(q)
        eta = delta[None, :] + self.X @ beta.T  # (n, J)
        g = np.tanh(0.5 * eta)
        mu = alpha + g @ w
        return alpha, w, delta, beta, s, g, mu

    def log_density(self, q):
        *_, s, g, mu = self._forward(q)
        sig = math.exp(s)
        r = self.y - mu
        theta = q[:-1]
        return -self.n * s - float(r @ r) / (2 * sig * sig) - 0.5 * float(theta @ theta) - sig + s

    def grad(self, q):
        alpha, w, delta, beta, s, g, mu = self._forward(q)
        sig = math.exp(s)
        r = self.y - mu
        rs = r / (sig * sig)
        dg = 0.5 * (1.0 - g * g)
        a = (rs[:, None] * dg) * w[None, :]  # (n, J)
        out = np.empty_like(q)
        J, p = self.J, self.p
        out[0] = rs.sum()
        out[1 : 1 + J] = g.T @ rs
        out[1 + J : 1 + 2 * J] = a.sum(axis=0)
        out[1 + 2 * J : 1 + 2 * J + J * p] = (a.T @ self.X).reshape(-1)
        out[:-1] -= q[:-1]
        out[-1] = -self.n + float(r @ r) / (sig * sig) - sig + 1.0
        return out

    def names(self):
        J, p = self.J, self.p
        return (
            ["alpha"]
            + [f"w{j + 1}" for j in range(J)]
            + [f"delta{j + 1}" for j in range(J)]
            + [f"beta{j + 1}_{k + 1}" for j in range(J) for k in range(p)]
            + ["log_sigma"]
        )


def ldl_unpack(z, m: int):
    """Unit lower-triangular ``L`` and ``d = exp(z[:m])``; the strict lower part of ``L`` is row-major in ``z[m:]``."""
    z = np.asarray(z, dtype=float)
    L = np.broadcast_to(np.eye(m), z.shape[:-1] + (m, m)).copy()
    il, jl = np.tril_indices(m, -1)
    L[..., il, jl] = z[..., m:]
    return L, np.exp(z[..., :m])


def ldl_precision(z, m: int):
    L, d = ldl_unpack(z, m)
    return (L * d[..., None, :]) @ np.swapaxes(L, -1, -2)


def ldl_pack(P) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    m = P.shape[0]
    C = np.linalg.cholesky(P)
    c = np.diag(C)
    L = C / c[None, :]
    il, jl = np.tril_indices(m, -1)
    return np.concatenate([np.log(c * c), L[il, jl]])


class WishartLDL:
    """``log p(z)`` of ``z -> P = L diag(exp z_1..m) L^T`` under a Gaussian likelihood and a Wishart prior.

    Terms: ``(a/2) log|P| - tr(P M)/2 + sum_j (m - j + 1) z_j`` where the last
    sum is the log-Jacobian of the map (``j`` 1-based), ``a`` collects the
    powers of ``|P|`` from likelihood and prior and ``M`` the quadratic terms.
    """

    def __init__(self, m: int, a: float, M):
        self.m = m
        self.a = float(a)
        self.M = np.asarray(M, dtype=float)
        self.jac = np.arange(m, 0, -1, dtype=float)
        self.il, self.jl = np.tril_indices(m, -1)

    def log_density(self, z, M=None):
        M = self.M if M is None else M
        P = ldl_precision(z, self.m)
        zd = z[: self.m]
        return 0.5 * self.a * float(zd.sum()) - 0.5 * float(np.sum(P * M)) + float(self.jac @ zd)

    def grad(self, z, M=None):
        M = self.M if M is None else M
        m = self.m
        L, d = ldl_unpack(z, m)
        ML = M @ L
        gz = 0.5 * self.a - 0.5 * d * np.einsum("ij,ij->j", L, ML) + self.jac
        gL = -(ML * d[None, :])
        return np.concatenate([gz, gL[self.il, self.jl]])


class MaxOffDiagF:
    """``F(z) = -max_{i > j} P(z)_{ij}`` (MTP2 sign pattern), piecewise smooth."""

    def __init__(self, m: int):
        self.m = m
        self.il, self.jl = np.tril_indices(m, -1)

    def __call__(self, z):
        P = ldl_precision(z, self.m)
        return -P[..., self.il, self.jl].max(axis=-1)

    def grad(self, z):
        m = self.m
        z = np.asarray(z, dtype=float)
        L, d = ldl_unpack(z, m)
        P = (L * d[None, :]) @ L.T
        k = int(np.argmax(P[self.il, self.jl]))
        i, j = self.il[k], self.jl[k]
        # P_ij = sum_k L_ik d_k L_jk
        gz = -(L[i] * d * L[j])
        gL = np.zeros((m, m))
        gL[i, :] -= d * L[j]
        gL[j, :] -= d * L[i]
        return np.concatenate([gz, gL[self.il, self.jl]])


class MTP2Posterior:
    """``y_t ~ N(0, P^{-1})`` with a Wishart prior of mean ``I`` and ``m + 10`` degrees of freedom."""

    def __init__(self, Y):
        Y = np.asarray(Y, dtype=float)
        n, m = Y.shape
        nu = m + 10
        # Wishart(V = I/nu, nu): |P|^{(nu-m-1)/2} exp(-nu tr(P)/2)
        self.core = WishartLDL(m, n + nu - m - 1, Y.T @ Y + nu * np.eye(m))
        self.m = m

    def log_density(self, z):
        return self.core.log_density(z)

    def grad(self, z):
        return self.core.grad(z)


class VARPosterior:
    """VAR(1) with ``N(0, 4^2)`` priors on ``alpha, B`` and a Wishart(``I``, ``m + 10``) prior on ``P``.

    ``q = (alpha, vec(B) row-major, z)``.
    """

    def __init__(self, Y):
        Y = np.asarray(Y, dtype=float)
        self.X = Y[:-1]
        self.Z = Y[1:]
        n1, m = self.Z.shape
        self.m = m
        nu = m + 10
        self.core = WishartLDL(m, n1 + nu - m - 1, np.eye(m))
        self.nb = m + m * m

    def _resid(self, q):
        m = self.m
        alpha = q[:m]
        B = q[m : m + m * m].reshape(m, m)
        return alpha, B, self.Z - alpha[None, :] - self.X @ B.T

    def log_density(self, q):
        alpha, B, E = self._resid(q)
        z = q[self.nb :]
        M = E.T @ E + np.eye(self.m)
        prior = -float(alpha @ alpha + np.sum(B * B)) / 32.0
        return self.core.log_density(z, M) + prior

    def grad(self, q):
        m = self.m
        alpha, B, E = self._resid(q)
        z = q[self.nb :]
        P = ldl_precision(z, m)
        EP = E @ P
        ga = EP.sum(axis=0) - alpha / 16.0
        gB = EP.T @ self.X - B / 16.0
        gz = self.core.grad(z, E.T @ E + np.eye(m))
        return np.concatenate([ga, gB.reshape(-1), gz])


# --------------------------------------------------------------------------
# catalog
# --------------------------------------------------------------------------

@dataclass
class ExampleModel:
    """A fully wired example: target, constraints, a feasible start and reference facts."""

    name: str
    model: TargetModel
    constraints: list
    q0: np.ndarray
    description: str = ""
    known_moments: Optional[tuple] = None
    provenance: str = ""
    exact_sampler: Optional[Callable] = None
    reference_data: dict = field(default_factory=dict)
    twin: Optional[str] = None

    @property
    def dim(self) -> int:
        return self.model.dim


FIG2_RHO = 0.75
FIG2_A = np.array([[1.0, 0.0], [1.0, -0.5]])
FIG2_B = np.array([-0.5, 0.1])
FIG2_V = 2.0
ELLIPSE = (0.55, (0.5, 1.0))
TOY_IID_Y = (-1.0, -0.3, 0.3, 1.2)


def _bivariate(rho: float) -> Gaussian:
    return Gaussian(np.zeros(2), np.array([[1.0, rho], [rho, 1.0]]))


def _fig2(kind: str) -> ExampleModel:
    g = _bivariate(FIG2_RHO)
    model = g.model(monitors=(Product(0, 1),), names=("q1*q2",))
    if kind == "linear":
        cons = [Linear([1.0, -2.0], 1.0)]
    elif kind == "l1":
        cons = [L1Norm(FIG2_A, FIG2_B, FIG2_V)]
    elif kind == "l2":
        cons = [L2Norm(FIG2_A, FIG2_B, FIG2_V)]
    else:
        F = SpectralRadiusF(np.diag([0.8, 0.9]), rows=[1, 0], cols=[0, 1])
        cons = [NonlinearAffine(np.eye(2), np.zeros(2), F, F.grad, vectorized=True, name="1-rho(B)")]
    return ExampleModel(
        f"fig2-{kind}",
        model,
        cons,
        np.zeros(2),
        description=f"bivariate normal, correlation {FIG2_RHO}, {kind} constraint",
        exact_sampler=g.sample,
        provenance="rejection oracle",
    )


def _std_normal() -> ExampleModel:
    g = Gaussian([0.0], [[1.0]])
    return ExampleModel(
        "std-normal", g.model(), [], np.zeros(1), "N(0,1), unconstrained",
        known_moments=(np.zeros(1), np.eye(1)), provenance="closed form", exact_sampler=g.sample,
    )


def _half_normal() -> ExampleModel:
    g = Gaussian([0.0], [[1.0]])
    mean, var = truncated_normal_moments(0.0, 1.0, 0.0)
    return ExampleModel(
        "half-normal", g.model(), [Linear([1.0], 0.0)], np.array([1.0]),
        "N(0,1) restricted to q >= 0",
        known_moments=(np.array([mean]), np.array([[var]])),
        provenance="truncated normal closed form", exact_sampler=g.sample,
    )


def _fig1() -> ExampleModel:
    g = Gaussian(np.zeros(2), np.eye(2))
    F = DiagonalQuadraticF(*ELLIPSE)
    c = NonlinearAffine(np.eye(2), np.zeros(2), F, F.grad, vectorized=True, name="0.55-0.5w1^2-w2^2")
    return ExampleModel(
        "fig1-ellipse", g.model(), [c], np.zeros(2),
        "standard bivariate normal inside the ellipse 0.55 - 0.5 q1^2 - q2^2 >= 0",
        exact_sampler=g.sample, provenance="rejection oracle",
    )


def ar1_data(n: int = 100, phi: float = 0.99, sigma: float = 0.1, seed: int = AR1_SEED):
    rng = np.random.default_rng(seed)
    y = np.empty(n)
    y[0] = rng.normal(0.0, sigma / math.sqrt(1.0 - phi * phi))
    for t in range(1, n):
        y[t] = phi * y[t - 1] + sigma * rng.standard_normal()
    return y


def mixture_data(n: int = 200, mu=(-0.5, 0.5), sigma: float = 1.0, seed: int = MIXTURE_SEED):
    rng = np.random.default_rng(seed)
    comp = rng.integers(0, 2, n)
    return np.asarray(mu)[comp] + sigma * rng.standard_normal(n)


def _toy(kind: str, transformed: bool) -> ExampleModel:
    if kind == "iid":
        post = IidGaussianPosterior(TOY_IID_Y)
        cons = [Linear([1.0, 0.0], 0.0)]
        q0 = np.array([0.5, 0.0])
        tr = Elementwise(("exp", "id"))
        data = {"y": list(TOY_IID_Y)}
        desc = "iid Gaussian, mu > 0"
    elif kind == "ar1":
        y = ar1_data()
        post = AR1Posterior(y)
        cons = [Linear([1.0, 0.0], 0.0), Linear([-1.0, 0.0], 1.0)]
        q0 = np.array([0.9, math.log(0.1)])
        tr = Elementwise(("expit", "id"))
        data = {"y": y.tolist(), "seed": AR1_SEED}
        desc = "AR(1), 0 < phi < 1"
    elif kind == "mixture":
        y = mixture_data()
        post = MixturePosterior(y)
        cons = [Linear([-1.0, 1.0, 0.0], 0.0)]
        q0 = np.array([-0.5, 0.5, 0.0])
        tr = OrderedPair()
        data = {"y": y.tolist(), "seed": MIXTURE_SEED}
        desc = "two-component Gaussian mixture, mu1 <= mu2"
    else:
        raise UnknownExample(f"toy-{kind}")
    names = post.param_names
    if transformed:
        dens = Reparametrized(post, tr)
        mons = tuple(ParamMonitor(post, k, tr) for k in range(len(names)))
        u0 = _inverse(tr, q0)
        model = TargetModel(len(q0), dens.log_density, dens.grad, mons, names)
        return ExampleModel(
            f"toy-{kind}-transformed", model, [], u0, desc + " (unconstrained reparametrization)",
            reference_data=data, twin=f"toy-{kind}",
        )
    mons = tuple(ParamMonitor(post, k) for k in range(len(names)))
    model = TargetModel(len(q0), post.log_density, post.grad, mons, names)
    return ExampleModel(
        f"toy-{kind}", model, cons, q0, desc, reference_data=data, twin=f"toy-{kind}-transformed",
    )


def _inverse(tr, q0):
    u = np.array(q0, dtype=float)
    if isinstance(tr, OrderedPair):
        u[1] = math.log(q0[1] - q0[0])
        return u
    for i, k in enumerate(tr.kinds):
        if k == "exp":
            u[i] = math.log(q0[i])
        elif k == "expit":
            u[i] = math.log(q0[i] / (1.0 - q0[i]))
    return u


def logreg_data(n: int = 200, p: int = 4, seed: int = LOGREG_SEED):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    X = (X - X.mean(axis=0)) / X.std(axis=0)
    beta = np.linspace(1.0, -0.5, p)
    y = (rng.random(n) < expit(-0.3 + X @ beta)).astype(float)
    return X, y


def _logreg(norm: str, s: float = 0.5) -> ExampleModel:
    from scipy.optimize import minimize

    X, y = logreg_data()
    p = X.shape[1]
    post = LogisticPosterior(X, y)
    ml = LogisticPosterior(X, y, prior_sd=1e12)
    fit = minimize(lambda q: -ml.log_density(q), np.zeros(p + 1), jac=lambda q: -ml.grad(q), method="BFGS")
    beta_hat = fit.x[1:]
    A = np.hstack([np.zeros((p, 1)), np.eye(p)])
    if norm == "l1":
        c = L1Norm(A, np.zeros(p), s * float(np.abs(beta_hat).sum()))
    else:
        c = L2Norm(A, np.zeros(p), s * float(np.linalg.norm(beta_hat)))
    names = ["delta"] + [f"beta{k + 1}" for k in range(p)]
    model = TargetModel(p + 1, post.log_density, post.grad, param_names=tuple(names))
    return ExampleModel(
        f"logreg-{norm}", model, [c], np.zeros(p + 1),
        f"logistic regression on synthetic data, ||beta||_{norm[1]} <= {s} ||beta_ML||",
        reference_data={"X": X.tolist(), "y": y.tolist(), "seed": LOGREG_SEED, "beta_ml": beta_hat.tolist(), "s": s},
    )


def nnet_data(n: int = 200, seed: int = NNET_SEED):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, 2))
    delta = np.array([0.5, -0.5])
    beta = np.array([[1.0, 0.0], [-0.1, 1.0]])
    eta = delta[None, :] + X @ beta.T
    y = np.tanh(0.5 * eta).sum(axis=1) + 0.1 * rng.standard_normal(n)
    return X, y


def _nnet(J: int = 2) -> ExampleModel:
    X, y = nnet_data()
    post = NeuralNetPosterior(X, y, J)
    d = post.dim
    cons = []
    for j in range(J):
        a = np.zeros(d)
        a[1 + j] = 1.0
        cons.append(Linear(a, 0.0))
    for j in range(1, J):
        a = np.zeros(d)
        a[1 + J + j] = 1.0
        a[1 + J + j - 1] = -1.0
        cons.append(Linear(a, 0.0))
    q0 = np.zeros(d)
    q0[1 : 1 + J] = 1.0
    q0[1 + J : 1 + 2 * J] = np.linspace(-0.5, 0.5, J) if J > 1 else 0.0
    q0[-1] = math.log(0.5)
    model = TargetModel(d, post.log_density, post.grad, param_names=tuple(post.names()))
    return ExampleModel(
        "neural-net", model, cons, q0,
        f"single hidden layer net (J={J}) with w_j >= 0 and ordered delta_j",
        reference_data={"X": X.tolist(), "y": y.tolist(), "seed": NNET_SEED},
    )


def _mtp2(m: int = 4, n: int = 250) -> ExampleModel:
    rng = np.random.default_rng(MTP2_SEED)
    P0 = (1.0 + 0.3 * m) * np.eye(m) - 0.3 * np.ones((m, m)) + 0.3 * np.eye(m)
    Y = rng.multivariate_normal(np.zeros(m), np.linalg.inv(P0), size=n)
    post = MTP2Posterior(Y)
    F = MaxOffDiagF(m)
    k = m * (m + 1) // 2
    c = NonlinearAffine(np.eye(k), np.zeros(k), F, F.grad, vectorized=True, name="-max offdiag P(z)")
    model = TargetModel(k, post.log_density, post.grad)
    return ExampleModel(
        "mtp2", model, [c], ldl_pack(P0),
        f"Gaussian precision (m={m}) with MTP2 sign constraint, log-Cholesky parameters",
        reference_data={"Y": Y.tolist(), "seed": MTP2_SEED},
    )


def _var(m: int = 2, n: int = 200) -> ExampleModel:
    rng = np.random.default_rng(VAR_SEED)
    B0 = 0.9 * np.eye(m) + 0.05 * (np.ones((m, m)) - np.eye(m))
    alpha0 = np.linspace(0.1, -0.1, m)
    cov = 0.1 * np.eye(m) + 0.05
    Y = np.zeros((n, m))
    for t in range(1, n):
        Y[t] = alpha0 + B0 @ Y[t - 1] + rng.multivariate_normal(np.zeros(m), cov)
    post = VARPosterior(Y)
    k = m * (m + 1) // 2
    d = m + m * m + k
    rows, cols = np.divmod(np.arange(m * m), m)
    F = SpectralRadiusF(np.zeros((m, m)), rows, cols)
    A = np.zeros((m * m, d))
    A[:, m : m + m * m] = np.eye(m * m)
    c = NonlinearAffine(A, np.zeros(m * m), F, F.grad, vectorized=True, name="1-rho(B)")
    q0 = np.concatenate([alpha0, B0.reshape(-1), ldl_pack(np.linalg.inv(cov))])
    model = TargetModel(d, post.log_density, post.grad)
    return ExampleModel(
        "var-stationary", model, [c], q0, f"VAR(1), m={m}, with rho(B) < 1",
        reference_data={"Y": Y.tolist(), "seed": VAR_SEED},
    )


_BUILDERS = {
    "std-normal": _std_normal,
    "half-normal": _half_normal,
    "fig1-ellipse": _fig1,
    "fig2-linear": lambda: _fig2("linear"),
    "fig2-l1": lambda: _fig2("l1"),
    "fig2-l2": lambda: _fig2("l2"),
    "fig2-spectral": lambda: _fig2("spectral"),
    "toy-iid": lambda: _toy("iid", False),
    "toy-iid-transformed": lambda: _toy("iid", True),
    "toy-ar1": lambda: _toy("ar1", False),
    "toy-ar1-transformed": lambda: _toy("ar1", True),
    "toy-mixture": lambda: _toy("mixture", False),
    "toy-mixture-transformed": lambda: _toy("mixture", True),
    "logreg-l1": lambda: _logreg("l1"),
    "logreg-l2": lambda: _logreg("l2"),
    "neural-net": _nnet,
    "mtp2": _mtp2,
    "var-stationary": _var,
}


def example_names() -> list[str]:
    return list(_BUILDERS)


def build_example(name: str) -> ExampleModel:
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise UnknownExample(f"unknown example {name!r}; choose from {', '.join(_BUILDERS)}") from None
    return builder()
