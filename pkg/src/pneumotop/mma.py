"""Method of moving asymptotes for bound-constrained nonlinear programs.

Minimizes f(x) subject to g_i(x) <= 0 and box bounds by solving a separable
convex approximation each iteration. Asymptotes contract under oscillation
and relax under steady progress; the convex subproblem is solved with a
primal-dual Newton interior-point method on its dual-augmented form, which
is always feasible thanks to elastic constraint variables.
"""
from __future__ import annotations

import numpy as np

from .errors import SolveError


class MMA:
    """Stateful MMA driver for a fixed problem size.

    Parameters
    ----------
    n, m : int
        Number of design variables and inequality constraints.
    move : float
        Move limit as a fraction of the box width per update.
    """

    def __init__(
        self,
        n: int,
        m: int,
        move: float = 0.2,
        asyinit: float = 0.5,
        asyincr: float = 1.2,
        asydecr: float = 0.7,
        albefa: float = 0.1,
        raa0: float = 1e-5,
        c_penalty: float = 1e4,
    ):
        self.n = n
        self.m = m
        self.move = move
        self.asyinit = asyinit
        self.asyincr = asyincr
        self.asydecr = asydecr
        self.albefa = albefa
        self.raa0 = raa0
        self.c_penalty = c_penalty
        self.iteration = 0
        self.low = None
        self.upp = None
        self.xold1 = None
        self.xold2 = None

    def update(
        self,
        x: np.ndarray,
        df0dx: np.ndarray,
        g: np.ndarray,
        dgdx: np.ndarray,
        xmin=0.0,
        xmax=1.0,
        move: float | None = None,
    ) -> np.ndarray:
        """One MMA step; returns the new design within move limits and bounds."""
        x = np.asarray(x, dtype=float)
        df0dx = np.asarray(df0dx, dtype=float)
        g = np.atleast_1d(np.asarray(g, dtype=float))
        dgdx = np.atleast_2d(np.asarray(dgdx, dtype=float))
        if not (np.all(np.isfinite(df0dx)) and np.all(np.isfinite(dgdx))):
            raise SolveError("MMA received non-finite gradients")
        xmin = np.broadcast_to(np.asarray(xmin, dtype=float), x.shape)
        xmax = np.broadcast_to(np.asarray(xmax, dtype=float), x.shape)
        move = self.move if move is None else min(move, self.move)

        if not np.any(df0dx) and not np.any(dgdx):
            return x.copy()

        # The subproblem optimum is invariant to the objective's scale, but
        # the interior-point tolerances are absolute; normalize so residual
        # magnitudes stay O(1) whatever the caller's objective units are.
        scale = np.abs(df0dx).max()
        if scale > 1.0:
            df0dx = df0dx / scale

        self.iteration += 1
        xnew = self._step(x, df0dx, g, dgdx, xmin, xmax, move)
        if xnew is None:
            xnew = self._step(x, df0dx, g, dgdx, xmin, xmax, move / 2.0)
        if xnew is None:
            raise SolveError("MMA subproblem failed to converge after move-limit retry")
        self.xold2 = self.xold1
        self.xold1 = x.copy()
        return xnew

    def _step(self, x, df0dx, g, dgdx, xmin, xmax, move):
        xmami = np.maximum(xmax - xmin, 1e-5)
        if self.iteration <= 2 or self.xold2 is None:
            low = x - self.asyinit * xmami
            upp = x + self.asyinit * xmami
        else:
            zzz = (x - self.xold1) * (self.xold1 - self.xold2)
            factor = np.ones_like(x)
            factor[zzz > 0] = self.asyincr
            factor[zzz < 0] = self.asydecr
            low = x - factor * (self.xold1 - self.low)
            upp = x + factor * (self.upp - self.xold1)
            low = np.clip(low, x - 10.0 * xmami, x - 0.01 * xmami)
            upp = np.clip(upp, x + 0.01 * xmami, x + 10.0 * xmami)
        self.low, self.upp = low, upp

        alfa = np.maximum.reduce(
            [low + self.albefa * (x - low), x - move * xmami, xmin]
        )
        beta = np.minimum.reduce(
            [upp - self.albefa * (upp - x), x + move * xmami, xmax]
        )

        ux1 = upp - x
        xl1 = x - low
        ux2 = ux1**2
        xl2 = xl1**2

        p0 = np.maximum(df0dx, 0.0)
        q0 = np.maximum(-df0dx, 0.0)
        pq0 = 0.001 * (p0 + q0) + self.raa0 / xmami
        p0 = (p0 + pq0) * ux2
        q0 = (q0 + pq0) * xl2

        pp = np.maximum(dgdx, 0.0)
        qq = np.maximum(-dgdx, 0.0)
        pq = 0.001 * (pp + qq) + self.raa0 / xmami[None, :]
        pp = (pp + pq) * ux2[None, :]
        qq = (qq + pq) * xl2[None, :]
        b = pp @ (1.0 / ux1) + qq @ (1.0 / xl1) - g

        return _subsolve(low, upp, alfa, beta, p0, q0, pp, qq, b, self.c_penalty)


def _subsolve(low, upp, alfa, beta, p0, q0, pp, qq, b, c_penalty, epsimin=1e-9):
    """Primal-dual interior-point solve of the separable MMA subproblem.

    Returns the optimal x, or None if the Newton iteration stalls.
    """
    n = low.size
    m = b.size
    a0 = 1.0
    a = np.zeros(m)
    c = np.full(m, c_penalty)
    d = np.ones(m)

    x = 0.5 * (alfa + beta)
    y = np.ones(m)
    z = 1.0
    lam = np.ones(m)
    xsi = np.maximum(1.0 / (x - alfa), 1.0)
    eta = np.maximum(1.0 / (beta - x), 1.0)
    mu = np.maximum(1.0, 0.5 * c)
    zet = 1.0
    s = np.ones(m)

    def residuals(x, y, z, lam, xsi, eta, mu, zet, s, epsi):
        ux1 = upp - x
        xl1 = x - low
        plam = p0 + lam @ pp
        qlam = q0 + lam @ qq
        gvec = pp @ (1.0 / ux1) + qq @ (1.0 / xl1)
        dpsidx = plam / ux1**2 - qlam / xl1**2
        rex = dpsidx - xsi + eta
        rey = c + d * y - mu - lam
        rez = a0 - zet - a @ lam
        relam = gvec - a * z - y + s - b
        rexsi = xsi * (x - alfa) - epsi
        reeta = eta * (beta - x) - epsi
        remu = mu * y - epsi
        rezet = zet * z - epsi
        res = lam * s - epsi
        full = np.concatenate(
            [rex, rey, [rez], relam, rexsi, reeta, remu, [rezet], res]
        )
        return np.linalg.norm(full), np.abs(full).max()

    epsi = 1.0
    while epsi > epsimin:
        resinorm, resimax = residuals(x, y, z, lam, xsi, eta, mu, zet, s, epsi)
        for _ in range(200):
            if resimax <= 0.9 * epsi:
                break
            ux1 = upp - x
            xl1 = x - low
            ux2 = ux1**2
            xl2 = xl1**2
            ux3 = ux1 * ux2
            xl3 = xl1 * xl2
            plam = p0 + lam @ pp
            qlam = q0 + lam @ qq
            gvec = pp @ (1.0 / ux1) + qq @ (1.0 / xl1)
            gg = pp / ux2[None, :] - qq / xl2[None, :]
            dpsidx = plam / ux2 - qlam / xl2
            delx = dpsidx - epsi / (x - alfa) + epsi / (beta - x)
            dely = c + d * y - lam - epsi / y
            delz = a0 - a @ lam - epsi / z
            dellam = gvec - a * z - y - b + epsi / lam
            diagx = 2.0 * (plam / ux3 + qlam / xl3)
            diagx += xsi / (x - alfa) + eta / (beta - x)
            diagy = d + mu / y
            diaglam = s / lam
            diaglamyi = diaglam + 1.0 / diagy

            blam = dellam + dely / diagy - gg @ (delx / diagx)
            alam = np.diag(diaglamyi) + (gg / diagx[None, :]) @ gg.T
            aa = np.zeros((m + 1, m + 1))
            aa[:m, :m] = alam
            aa[:m, m] = a
            aa[m, :m] = a
            aa[m, m] = -zet / z
            bb = np.concatenate([blam, [delz]])
            try:
                solut = np.linalg.solve(aa, bb)
            except np.linalg.LinAlgError:
                return None
            dlam = solut[:m]
            dz = solut[m]
            dx = -delx / diagx - (dlam @ gg) / diagx
            dy = -dely / diagy + dlam / diagy
            dxsi = -xsi + epsi / (x - alfa) - (xsi * dx) / (x - alfa)
            deta = -eta + epsi / (beta - x) + (eta * dx) / (beta - x)
            dmu = -mu + epsi / y - (mu * dy) / y
            dzet = -zet + epsi / z - zet * dz / z
            ds = -s + epsi / lam - (s * dlam) / lam

            xx = np.concatenate([y, [z], lam, xsi, eta, mu, [zet], s])
            dxx = np.concatenate([dy, [dz], dlam, dxsi, deta, dmu, [dzet], ds])
            stepxx = -1.01 * dxx / xx
            stepalfa = -1.01 * dx / (x - alfa)
            stepbeta = 1.01 * dx / (beta - x)
            stminv = max(stepxx.max(), stepalfa.max(), stepbeta.max(), 1.0)
            steg = 1.0 / stminv

            xold, yold, zold = x, y, z
            lamold, xsiold, etaold = lam, xsi, eta
            muold, zetold, sold = mu, zet, s
            ok = False
            for _ in range(50):
                x = xold + steg * dx
                y = yold + steg * dy
                z = zold + steg * dz
                lam = lamold + steg * dlam
                xsi = xsiold + steg * dxsi
                eta = etaold + steg * deta
                mu = muold + steg * dmu
                zet = zetold + steg * dzet
                s = sold + steg * ds
                newnorm, newmax = residuals(x, y, z, lam, xsi, eta, mu, zet, s, epsi)
                if newnorm < 2.0 * resinorm:
                    ok = True
                    break
                steg *= 0.5
            if not ok:
                return None
            resinorm, resimax = newnorm, newmax
        else:
            return None
        epsi *= 0.1
    return x
