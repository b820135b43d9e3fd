"""Planar strictly convex arcs: collision geometry and curve-carried Wigner.

A curve is an analytic arc gamma(s) with outward normal N(s) and curvature
kappa(s) > 0.  The collision point R_u u' is the second intersection of the
line through u' parallel to the tangent at u; on arcs whose normal image is
shorter than pi this is single-branch, the Jacobian closed forms

    J(u, u')  = |u'' - u'| kappa(u) / |N(u) ^ N(u'')|
    Jt(u, u') = |N(u') ^ N(u'')| / |N(u) ^ N(u'')|
    M(u',u'') = J / Jt = |u'' - u'| kappa(u) / |N(u') ^ N(u'')|

hold, the J-weighted transform satisfies X_S* W_S = |E g|^2 on the nose and
the Moyal pairing reduces to the single M-kernel double integral.  (On a
closed curve the collision map is two-branch; the unit circle then folds
onto the S^1 grid transform with an extra factor 2.)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _wedge(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


@dataclass(eq=False)
class ConvexCurve:
    """Analytic strictly convex arc with arclength quadrature nodes."""

    kind: str
    params: dict
    s_lo: float
    s_hi: float
    n_nodes: int
    closed: bool = False

    def __post_init__(self):
        h = (self.s_hi - self.s_lo) / self.n_nodes
        self.s_nodes = self.s_lo + h * (np.arange(self.n_nodes) + 0.5)
        self.qweights = np.full(self.n_nodes, h) * self.speed(self.s_nodes)
        if np.any(self.curvature(self.s_nodes) <= 0):
            raise ValueError("curvature must be positive on the parameter domain")
        self.s_lo_ext, self.s_hi_ext = self.s_lo, self.s_hi
        if not self.closed:
            arc = self.normal_arc_length()
            if arc >= np.pi:
                raise ValueError(
                    f"normal image spans {arc:.3f} >= pi; the collision map "
                    "is not single-branch on this arc"
                )
            self._extend_domain(arc)

    def _extend_domain(self, span: float, budget: float = 0.95 * np.pi) -> None:
        """Analytically extend the parameter window for off-arc reflections.

        Chords through arc points parallel to arc tangents can leave the
        arc; the parametrizations are analytic, so the collision root-find
        works on an extension whose total normal span stays under pi.
        Amplitudes remain supported on the arc proper.
        """
        step = (self.s_hi - self.s_lo) / self.n_nodes
        max_steps = 8 * self.n_nodes
        for _ in range(max_steps):
            if span >= budget:
                break
            grew = False
            for side in ("lo", "hi"):
                s = self.s_lo_ext - step if side == "lo" else self.s_hi_ext
                mids = np.asarray([s + 0.5 * step])
                try:
                    kap = float(self.curvature(mids))
                    spd = float(self.speed(mids))
                except (ValueError, FloatingPointError):
                    continue
                if not np.isfinite(kap) or kap <= 0:
                    continue
                gain = kap * spd * step
                if span + gain >= budget:
                    continue
                if side == "lo":
                    self.s_lo_ext -= step
                else:
                    self.s_hi_ext += step
                span += gain
                grew = True
            if not grew:
                break

    # -- parametrization ----------------------------------------------------

    def point(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if self.kind == "circle":
            r = self.params["radius"]
            return np.stack([r * np.cos(s), r * np.sin(s)], axis=-1)
        if self.kind == "ellipse":
            a, b = self.params["a"], self.params["b"]
            return np.stack([a * np.cos(s), b * np.sin(s)], axis=-1)
        if self.kind == "graph":
            f = self.params["f"]
            return np.stack([s, f(s)], axis=-1)
        raise ValueError(f"unknown curve kind {self.kind}")

    def velocity(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if self.kind == "circle":
            r = self.params["radius"]
            return np.stack([-r * np.sin(s), r * np.cos(s)], axis=-1)
        if self.kind == "ellipse":
            a, b = self.params["a"], self.params["b"]
            return np.stack([-a * np.sin(s), b * np.cos(s)], axis=-1)
        if self.kind == "graph":
            df = self.params["df"]
            return np.stack([np.ones_like(s), df(s)], axis=-1)
        raise ValueError(self.kind)

    def speed(self, s: np.ndarray) -> np.ndarray:
        return np.linalg.norm(self.velocity(s), axis=-1)

    def tangent(self, s: np.ndarray) -> np.ndarray:
        v = self.velocity(s)
        return v / np.linalg.norm(v, axis=-1, keepdims=True)

    def normal(self, s: np.ndarray) -> np.ndarray:
        """Outward unit normal (tangent rotated -90 degrees)."""
        t = self.tangent(s)
        return np.stack([t[..., 1], -t[..., 0]], axis=-1)

    def curvature(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if self.kind == "circle":
            return np.full(np.shape(s), 1.0 / self.params["radius"])
        if self.kind == "ellipse":
            a, b = self.params["a"], self.params["b"]
            den = (a * np.sin(s)) ** 2 + (b * np.cos(s)) ** 2
            return a * b / den**1.5
        if self.kind == "graph":
            df, d2f = self.params["df"], self.params["d2f"]
            return np.abs(d2f(s)) / (1.0 + df(s) ** 2) ** 1.5
        raise ValueError(self.kind)

    # -- derived geometry ---------------------------------------------------

    def normal_arc_length(self) -> float:
        """Angular span of the normal image (turning of the tangent)."""
        s = np.linspace(self.s_lo, self.s_hi, 4 * self.n_nodes + 1)
        mid = 0.5 * (s[1:] + s[:-1])
        return float(np.sum(self.curvature(mid) * self.speed(mid) * np.diff(s)))

    def measure(self, mask: np.ndarray | None = None) -> float:
        if mask is None:
            return float(np.sum(self.qweights))
        return float(np.sum(self.qweights[mask]))

    def integrate(self, values: np.ndarray):
        return np.tensordot(self.qweights, values, axes=(0, 0))

    def scaled(self, lam: float) -> "ConvexCurve":
        """The isotropic dilate lam * S (analytic families only)."""
        if self.kind == "circle":
            params = {"radius": lam * self.params["radius"]}
            return ConvexCurve("circle", params, self.s_lo, self.s_hi,
                               self.n_nodes, closed=self.closed)
        if self.kind == "ellipse":
            params = {"a": lam * self.params["a"], "b": lam * self.params["b"]}
            return ConvexCurve("ellipse", params, self.s_lo, self.s_hi,
                               self.n_nodes, closed=self.closed)
        raise ValueError("scaling implemented for circle and ellipse families")

    def to_json(self) -> str:
        import json

        rec = {"kind": self.kind, "s_lo": self.s_lo, "s_hi": self.s_hi,
               "n_nodes": self.n_nodes, "closed": self.closed}
        rec["params"] = {k: v for k, v in self.params.items() if not callable(v)}
        return json.dumps(rec, sort_keys=True)


def circle_arc(radius: float, s_lo: float, s_hi: float, n_nodes: int) -> ConvexCurve:
    return ConvexCurve("circle", {"radius": radius}, s_lo, s_hi, n_nodes)


def ellipse_arc(a: float, b: float, s_lo: float, s_hi: float, n_nodes: int) -> ConvexCurve:
    return ConvexCurve("ellipse", {"a": a, "b": b}, s_lo, s_hi, n_nodes)


def full_ellipse(a: float, b: float, n_nodes: int) -> ConvexCurve:
    return ConvexCurve("ellipse", {"a": a, "b": b}, 0.0, 2 * np.pi, n_nodes, closed=True)


def graph_arc(f, df, d2f, t_lo: float, t_hi: float, n_nodes: int) -> ConvexCurve:
    return ConvexCurve("graph", {"f": f, "df": df, "d2f": d2f}, t_lo, t_hi, n_nodes)


# ---------------------------------------------------------------------------
# collision map


def _height_zero(curve: ConvexCurve, normal: np.ndarray, level: float,
                 bracket: tuple[float, float], tol: float = 1e-13) -> float:
    """Bisect h(s) = gamma(s).normal - level inside a sign-changing bracket."""
    lo, hi = bracket
    flo = float(curve.point(lo) @ normal - level)
    fhi = float(curve.point(hi) @ normal - level)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0:
        raise ValueError("collision bracketing failed (normal-arc hypothesis?)")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = float(curve.point(mid) @ normal - level)
        if fm == 0.0 or hi - lo < tol:
            return mid
        if flo * fm < 0:
            hi, fhi = mid, fm
        else:
            lo, flo = mid, fm
    return 0.5 * (lo + hi)


def collision_point(curve: ConvexCurve, s_u: float, s_up: float,
                    strict: bool = True) -> float:
    """Parameter of u'' = R_u u': the chord through u' parallel to T(u).

    The height gamma(s).N(u) has its unique interior extremum at s_u on a
    strictly convex arc with a short normal image, so the second root lies
    on the far side of s_u and a sign-checked bisection finds it; raises
    when the chord exits the arc (the normal-arc hypothesis fails for the
    requested pair).  Returns s_up itself for the degenerate pair u' = u.
    """
    s_u, s_up = float(s_u), float(s_up)
    nrm = curve.normal(np.asarray(s_u))
    level = float(curve.point(np.asarray(s_up)) @ nrm)
    h_ext = float(curve.point(np.asarray(s_u)) @ nrm)
    scale = max(1.0, float(np.max(np.abs(curve.point(curve.s_nodes)))))
    if abs(h_ext - level) <= 1e-13 * scale:
        return s_u  # tangency: R_u u = u
    if curve.closed:
        period = curve.s_hi - curve.s_lo
        # the height on a closed convex curve has one max and one min; the
        # two roots straddle the extremum at s_u (mod period)
        lo, hi = s_u, s_u + period
        scan = np.linspace(lo, hi, 8 * curve.n_nodes)
        vals = curve.point(scan) @ nrm - level
        sign = np.sign(vals)
        sign[sign == 0] = 1.0
        flips = np.nonzero(sign[:-1] * sign[1:] < 0)[0]
        roots = [_height_zero(curve, nrm, level, (scan[i], scan[i + 1])) for i in flips]
        roots = [np.mod(r - curve.s_lo, period) + curve.s_lo for r in roots]
        roots = [r for r in roots
                 if min(abs(r - s_up), period - abs(r - s_up)) > 1e-7]
        if not roots:
            return s_up
        return float(roots[0])
    if s_up >= s_u:
        lo, hi = curve.s_lo_ext, s_u
    else:
        lo, hi = s_u, curve.s_hi_ext
    f_lo = float(curve.point(np.asarray(lo)) @ nrm - level)
    f_hi = float(curve.point(np.asarray(hi)) @ nrm - level)
    if f_lo * f_hi > 0:
        if strict:
            raise ValueError(
                "collision bracketing failed: the chord through u' parallel to "
                "T(u) exits even the extended arc (normal-arc hypothesis violated)"
            )
        return float("nan")  # no partner on the extension: zero contribution
    return _height_zero(curve, nrm, level, (lo, hi))


def collision_table(curve: ConvexCurve) -> np.ndarray:
    """s-parameters of R_{u_i} u_j for all node pairs, shape (n, n)."""
    n = curve.n_nodes
    out = np.empty((n, n))
    for i, su in enumerate(curve.s_nodes):
        for j, sp in enumerate(curve.s_nodes):
            out[i, j] = collision_point(curve, su, sp, strict=False)
    return out


def curve_jacobians(curve: ConvexCurve, s_u: float, s_up: float
                    ) -> tuple[float, float, float]:
    """(J, Jt, M) closed forms at the pair (u, u'')=(u, R_u u')."""
    s_upp = collision_point(curve, s_u, s_up)
    u = curve.point(np.asarray(s_u))
    up = curve.point(np.asarray(s_up))
    upp = curve.point(np.asarray(s_upp))
    Nu = curve.normal(np.asarray(s_u))
    Np = curve.normal(np.asarray(s_up))
    Npp = curve.normal(np.asarray(s_upp))
    kap = float(curve.curvature(np.asarray(s_u)))
    chord = float(np.linalg.norm(upp - up))
    w_u_pp = abs(float(_wedge(Nu, Npp)))
    w_p_pp = abs(float(_wedge(Np, Npp)))
    if w_u_pp < 1e-14 or chord < 1e-14:
        raise ValueError("degenerate pair: u'' coincides with u' or u")
    J = chord * kap / w_u_pp
    Jt = w_p_pp / w_u_pp
    return J, Jt, J / Jt


def collision_jacobian_fd(curve: ConvexCurve, s_u: float, s_up: float,
                          eps: float = 1e-5) -> float:
    """Finite-difference |d sigma(u'')/d sigma(u)| for the measure-change J."""
    sp = collision_point(curve, s_u + eps, s_up)
    sm = collision_point(curve, s_u - eps, s_up)
    num = abs(sp - sm) * float(curve.speed(np.asarray(0.5 * (sp + sm))))
    den = 2 * eps * float(curve.speed(np.asarray(s_u)))
    return num / den


def curve_invariants(curve: ConvexCurve, pair_samples: int = 60) -> tuple[float, float]:
    """(Q, Lambda): curvature quotient and the sup of sqrt(M) over pairs.

    Lambda refines near nearly-parallel normals where M peaks.
    """
    dense = np.linspace(curve.s_lo, curve.s_hi, 8 * curve.n_nodes + 1)
    kap = curve.curvature(dense)
    Q = float(np.max(kap) / np.min(kap))
    ss = np.linspace(curve.s_lo, curve.s_hi, pair_samples + 1)[:-1] + \
        0.5 * (curve.s_hi - curve.s_lo) / pair_samples
    best = 0.0
    argbest = (ss[0], ss[1])
    for su in ss:
        for sp in ss:
            try:
                _, _, M = curve_jacobians(curve, su, sp)
            except ValueError:
                continue
            if M > best:
                best, argbest = M, (su, sp)
    # local refinement around the best pair
    du = (curve.s_hi - curve.s_lo) / pair_samples
    fine_u = np.linspace(argbest[0] - du, argbest[0] + du, 9)
    fine_p = np.linspace(argbest[1] - du, argbest[1] + du, 9)
    for su in fine_u:
        for sp in fine_p:
            if not (curve.s_lo < su < curve.s_hi and curve.s_lo < sp < curve.s_hi):
                continue
            try:
                _, _, M = curve_jacobians(curve, su, sp)
            except ValueError:
                continue
            best = max(best, M)
    return Q, float(np.sqrt(best))


# ---------------------------------------------------------------------------
# curve midpoint sets, extension, Wigner and Moyal


def curve_midpoint_mask(curve: ConvexCurve, mask: np.ndarray,
                        table: np.ndarray, tol: float | None = None) -> np.ndarray:
    """Nodes u with R_u u' within tol of a member of the masked set."""
    if tol is None:
        tol = 2.0 * (curve.s_hi - curve.s_lo) / curve.n_nodes
    members = curve.s_nodes[mask]
    out = mask.copy()
    if members.size == 0:
        return out
    for i in range(curve.n_nodes):
        s_pp = table[i, mask]
        s_pp = s_pp[np.isfinite(s_pp)]
        if s_pp.size == 0:
            continue
        d = np.abs(s_pp[:, None] - members[None, :])
        if np.min(d) <= tol:
            out[i] = True
    return out


def curve_extension(curve: ConvexCurve, values: np.ndarray, points: np.ndarray
                    ) -> np.ndarray:
    """sum_k q_k g(u_k) e^{-2 pi i x.u_k} (arclength quadrature)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    nodes = curve.point(curve.s_nodes)
    phase = np.exp(-2j * np.pi * (pts @ nodes.T))
    vals = np.asarray(values)
    coeff = curve.qweights[:, None] * (vals[:, None] if vals.ndim == 1 else vals)
    out = phase @ coeff
    return out[:, 0] if vals.ndim == 1 else out


def curve_wigner(curve: ConvexCurve, g1, g2, i_node: int,
                 v_points: np.ndarray, table: np.ndarray) -> np.ndarray:
    """W_S(g1,g2)(u_i, v) = int g1(u') conj(g2(R_u u')) e^{-2 pi i (u'-u'').v} J dsigma.

    g1, g2: callables s -> complex amplitude; v_points: (P,) tangent
    coordinates (v = c T(u)).  Hermitian-symmetrized like the sphere version.
    """
    def raw(a, b):
        s_u = curve.s_nodes[i_node]
        Nu = curve.normal(np.asarray(s_u))
        Tu = np.array([-Nu[1], Nu[0]])
        s_pp = table[i_node].copy()
        dead = ~np.isfinite(s_pp)  # reflection left the extended arc
        s_pp[dead] = s_u
        up = curve.point(curve.s_nodes)
        upp = curve.point(s_pp)
        kap = float(curve.curvature(np.asarray(s_u)))
        Npp = curve.normal(s_pp)
        w_u_pp = np.abs(_wedge(Nu[None, :], Npp))
        chord = np.linalg.norm(upp - up, axis=1)
        good = w_u_pp > 1e-13
        J = np.zeros(curve.n_nodes)
        J[good] = chord[good] * kap / w_u_pp[good]
        # the degenerate node u' = u carries J -> kappa(u)/kappa(u') = 1
        J[~good] = 1.0
        J[dead] = 0.0
        xi = (up - upp) @ Tu  # chord is parallel to T(u)
        rho = curve.qweights * a(curve.s_nodes) * np.conj(b(s_pp)) * J
        v = np.atleast_1d(np.asarray(v_points, dtype=float))
        return rho @ np.exp(-2j * np.pi * np.outer(xi, v))

    return 0.5 * (raw(g1, g2) + np.conj(raw(g2, g1)))


def curve_moyal_closed(curve: ConvexCurve, f1, f2, g1, g2) -> complex:
    """Single M-kernel double integral form of the arc Moyal identity."""
    s = curve.s_nodes
    n = curve.n_nodes
    M = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            try:
                _, _, Mij = curve_jacobians(curve, _collision_center(curve, s[i], s[j]), s[i])
            except ValueError:
                continue
            M[i, j] = Mij
    # diagonal: M(u', u') = 1 (chord/normal-wedge limit)
    np.fill_diagonal(M, 1.0)
    u1 = curve.qweights * f1(s) * np.conj(g1(s))
    u2 = curve.qweights * np.conj(f2(s)) * g2(s)
    return complex(u1 @ M @ u2)


def _collision_center(curve: ConvexCurve, s_up: float, s_upp: float) -> float:
    """Parameter of the collision point u of the pair (u', u'').

    u is the unique arc point whose tangent is parallel to the chord
    u''-u'; since the normal turns monotonically and spans less than pi,
    g(s) = N(s).chord has exactly one sign change, found by bisection.
    """
    up = curve.point(np.asarray(s_up))
    upp = curve.point(np.asarray(s_upp))
    chord = upp - up
    cn = np.linalg.norm(chord)
    if cn < 1e-15:
        return float(s_up)
    chord = chord / cn

    def g(sv: float) -> float:
        return float(curve.normal(np.asarray(sv)) @ chord)

    lo, hi = curve.s_lo, curve.s_hi
    g_lo, g_hi = g(lo), g(hi)
    if g_lo * g_hi > 0:
        raise ValueError("no tangent parallel to the chord inside the arc")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if gm == 0.0 or hi - lo < 1e-13:
            return mid
        if g_lo * gm < 0:
            hi, g_hi = mid, gm
        else:
            lo, g_lo = mid, gm
    return 0.5 * (lo + hi)


def curve_xray_l2_sq(w, curve: ConvexCurve, mask: np.ndarray,
                     radius: float, m_pts: int) -> float:
    """||X_S w||^2 over {(u, v): u in E}: lines with direction N(u), offset in T(u)."""
    h = 2.0 * radius / m_pts
    offs = -radius + h * (np.arange(m_pts) + 0.5)
    total = 0.0
    for i in np.nonzero(mask)[0]:
        s = curve.s_nodes[i]
        Nu = curve.normal(np.asarray(s))
        Tu = np.array([-Nu[1], Nu[0]])
        pts = offs[:, None] * Tu[None, :]
        vals = w.line_integral(pts, np.broadcast_to(Nu, pts.shape))
        total += curve.qweights[i] * np.sum(np.abs(vals) ** 2) * h
    return float(total)
