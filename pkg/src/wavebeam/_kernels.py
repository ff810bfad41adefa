"""Compiled inner loops for the planar rod solver.

Everything here operates on bare float64 arrays; the public modules own
validation, units and bookkeeping.  Curvature measure is 2*tan(phi/2) at
each interior vertex (phi = turning angle between adjacent edges); a
small denominator guard keeps the arithmetic finite near foldback.

Damping, applied every step:
  - mass-proportional (alpha) and global viscous (c): implicit in the
    velocity update, unconditionally dissipative;
  - stiffness-proportional (beta): per-spring implicit relaxation of the
    strain rate (Gauss-Seidel sweep over stretch edges and bending
    vertices).  Each relaxation is a contraction along the spring's
    strain-gradient direction, so it dissipates for any beta and dt and
    conserves linear momentum exactly.
"""
from __future__ import annotations

import numpy as np
from numba import njit

_EPS = 1e-14


@njit(cache=True)
def internal_forces(x, rest_len, EA, EI, ell_bar, f_out):
    """Stretch + bend elastic forces (-grad energy), accumulated into f_out."""
    n = x.shape[0]

    for i in range(n - 1):
        ex = x[i + 1, 0] - x[i, 0]
        ey = x[i + 1, 1] - x[i, 1]
        ln = np.sqrt(ex * ex + ey * ey)
        if ln < _EPS:
            continue
        f = (EA[i] / rest_len[i]) * (ln - rest_len[i]) / ln
        f_out[i, 0] += f * ex
        f_out[i, 1] += f * ey
        f_out[i + 1, 0] -= f * ex
        f_out[i + 1, 1] -= f * ey

    for j in range(1, n - 1):
        e1x = x[j, 0] - x[j - 1, 0]
        e1y = x[j, 1] - x[j - 1, 1]
        e2x = x[j + 1, 0] - x[j, 0]
        e2y = x[j + 1, 1] - x[j, 1]
        a = np.sqrt(e1x * e1x + e1y * e1y)
        b = np.sqrt(e2x * e2x + e2y * e2y)
        if a < _EPS or b < _EPS:
            continue
        c = e1x * e2x + e1y * e2y
        s = e1x * e2y - e1y * e2x
        D = a * b + c
        if D < _EPS * a * b:
            D = _EPS * a * b
        kappa = 2.0 * s / D
        kb = EI[j - 1] / ell_bar[j - 1]

        # d kappa / d e1 and / d e2
        g1x = (2.0 / D) * e2y - (kappa / D) * ((b / a) * e1x + e2x)
        g1y = (2.0 / D) * (-e2x) - (kappa / D) * ((b / a) * e1y + e2y)
        g2x = (2.0 / D) * (-e1y) - (kappa / D) * ((a / b) * e2x + e1x)
        g2y = (2.0 / D) * e1x - (kappa / D) * ((a / b) * e2y + e1y)

        coeff = kb * kappa
        # chain rule to nodes: x_{j-1}: -g1, x_j: g1-g2, x_{j+1}: g2
        f_out[j - 1, 0] += coeff * g1x
        f_out[j - 1, 1] += coeff * g1y
        f_out[j, 0] -= coeff * (g1x - g2x)
        f_out[j, 1] -= coeff * (g1y - g2y)
        f_out[j + 1, 0] -= coeff * g2x
        f_out[j + 1, 1] -= coeff * g2y


@njit(cache=True)
def apply_beta_damping(x, v, inv_mass, rest_len, EA, EI, ell_bar, beta, dt):
    """Implicitly relax strain rates with per-spring dashpots c = beta * k.

    Mutates v; returns the kinetic energy removed (>= 0).  Pinned nodes
    enter with inv_mass 0 and are left untouched.
    """
    if beta <= 0.0:
        return 0.0
    n = x.shape[0]
    removed = 0.0

    for i in range(n - 1):
        ex = x[i + 1, 0] - x[i, 0]
        ey = x[i + 1, 1] - x[i, 1]
        ln = np.sqrt(ex * ex + ey * ey)
        if ln < _EPS:
            continue
        ux = ex / ln
        uy = ey / ln
        # g = |e|; grad on node i is -u, on i+1 is +u
        gdot = ux * (v[i + 1, 0] - v[i, 0]) + uy * (v[i + 1, 1] - v[i, 1])
        w = inv_mass[i] + inv_mass[i + 1]
        if w < _EPS:
            continue
        cdash = beta * EA[i] / rest_len[i]
        dg = gdot * (1.0 - 1.0 / (1.0 + dt * cdash * w))
        lam = dg / w
        v[i, 0] += lam * ux * inv_mass[i]
        v[i, 1] += lam * uy * inv_mass[i]
        v[i + 1, 0] -= lam * ux * inv_mass[i + 1]
        v[i + 1, 1] -= lam * uy * inv_mass[i + 1]
        removed += (dg / w) * (gdot - 0.5 * dg)

    for j in range(1, n - 1):
        e1x = x[j, 0] - x[j - 1, 0]
        e1y = x[j, 1] - x[j - 1, 1]
        e2x = x[j + 1, 0] - x[j, 0]
        e2y = x[j + 1, 1] - x[j, 1]
        a = np.sqrt(e1x * e1x + e1y * e1y)
        b = np.sqrt(e2x * e2x + e2y * e2y)
        if a < _EPS or b < _EPS:
            continue
        c = e1x * e2x + e1y * e2y
        s = e1x * e2y - e1y * e2x
        D = a * b + c
        if D < _EPS * a * b:
            D = _EPS * a * b
        kappa = 2.0 * s / D
        g1x = (2.0 / D) * e2y - (kappa / D) * ((b / a) * e1x + e2x)
        g1y = (2.0 / D) * (-e2x) - (kappa / D) * ((b / a) * e1y + e2y)
        g2x = (2.0 / D) * (-e1y) - (kappa / D) * ((a / b) * e2x + e1x)
        g2y = (2.0 / D) * e1x - (kappa / D) * ((a / b) * e2y + e1y)
        # node gradients: p = -g1, q = g1-g2, r = g2
        px, py = -g1x, -g1y
        qx, qy = g1x - g2x, g1y - g2y
        rx, ry = g2x, g2y
        kdot = (px * v[j - 1, 0] + py * v[j - 1, 1]
                + qx * v[j, 0] + qy * v[j, 1]
                + rx * v[j + 1, 0] + ry * v[j + 1, 1])
        w = (inv_mass[j - 1] * (px * px + py * py)
             + inv_mass[j] * (qx * qx + qy * qy)
             + inv_mass[j + 1] * (rx * rx + ry * ry))
        if w < _EPS:
            continue
        cdash = beta * EI[j - 1] / ell_bar[j - 1]
        dg = kdot * (1.0 - 1.0 / (1.0 + dt * cdash * w))
        lam = dg / w
        v[j - 1, 0] -= lam * px * inv_mass[j - 1]
        v[j - 1, 1] -= lam * py * inv_mass[j - 1]
        v[j, 0] -= lam * qx * inv_mass[j]
        v[j, 1] -= lam * qy * inv_mass[j]
        v[j + 1, 0] -= lam * rx * inv_mass[j + 1]
        v[j + 1, 1] -= lam * ry * inv_mass[j + 1]
        removed += (dg / w) * (kdot - 0.5 * dg)

    return removed


@njit(cache=True)
def elastic_energy_kernel(x, rest_len, EA, EI, ell_bar):
    n = x.shape[0]
    e_str = 0.0
    for i in range(n - 1):
        ex = x[i + 1, 0] - x[i, 0]
        ey = x[i + 1, 1] - x[i, 1]
        ln = np.sqrt(ex * ex + ey * ey)
        d = ln - rest_len[i]
        e_str += 0.5 * (EA[i] / rest_len[i]) * d * d
    e_bend = 0.0
    for j in range(1, n - 1):
        e1x = x[j, 0] - x[j - 1, 0]
        e1y = x[j, 1] - x[j - 1, 1]
        e2x = x[j + 1, 0] - x[j, 0]
        e2y = x[j + 1, 1] - x[j, 1]
        a = np.sqrt(e1x * e1x + e1y * e1y)
        b = np.sqrt(e2x * e2x + e2y * e2y)
        if a < _EPS or b < _EPS:
            continue
        c = e1x * e2x + e1y * e2y
        s = e1x * e2y - e1y * e2x
        D = a * b + c
        if D < _EPS * a * b:
            D = _EPS * a * b
        kappa = 2.0 * s / D
        e_bend += 0.5 * (EI[j - 1] / ell_bar[j - 1]) * kappa * kappa
    return e_str + e_bend


@njit(cache=True)
def node_normal(x, j, out):
    """Unit left normal (90 deg CCW from tangent) at node j into out[0:2]."""
    n = x.shape[0]
    if j == 0:
        tx = x[1, 0] - x[0, 0]
        ty = x[1, 1] - x[0, 1]
    elif j == n - 1:
        tx = x[n - 1, 0] - x[n - 2, 0]
        ty = x[n - 1, 1] - x[n - 2, 1]
    else:
        tx = x[j + 1, 0] - x[j - 1, 0]
        ty = x[j + 1, 1] - x[j - 1, 1]
    tn = np.sqrt(tx * tx + ty * ty)
    if tn < _EPS:
        out[0] = 0.0
        out[1] = 1.0
    else:
        out[0] = -ty / tn
        out[1] = tx / tn


@njit(cache=True)
def tendon_surface_points(x, offsets, pts):
    """Signed-offset surface points (one per node) into pts (n, 2)."""
    n = x.shape[0]
    nrm = np.empty(2)
    for j in range(n):
        node_normal(x, j, nrm)
        pts[j, 0] = x[j, 0] + offsets[j] * nrm[0]
        pts[j, 1] = x[j, 1] + offsets[j] * nrm[1]


@njit(cache=True)
def _taut_span(pts, a, b, side, chain):
    """Taut-string path of a tendon from surface point a to b.

    The string is pinned at both ends and cannot pass through the beam
    surface on its own side, so it hugs the convex-hull path over any
    points that bulge into it.  side = +1 for the left tendon (string
    stays on the +normal side), -1 for the right.  Node indices of the
    contact chain (ends included) are written to chain; returns the
    chain length m.
    """
    m = 0
    for i in range(a, b + 1):
        while m >= 2:
            j1 = chain[m - 2]
            j2 = chain[m - 1]
            v1x = pts[j2, 0] - pts[j1, 0]
            v1y = pts[j2, 1] - pts[j1, 1]
            v2x = pts[i, 0] - pts[j2, 0]
            v2y = pts[i, 1] - pts[j2, 1]
            if side * (v1x * v2y - v1y * v2x) >= 0.0:
                m -= 1
            else:
                break
        chain[m] = i
        m += 1
    return m


@njit(cache=True)
def _tendon_chain(x, guide_idx, offsets, pts, chain):
    """Full contact chain A → guide → B for one tendon; returns (m, length)."""
    n = x.shape[0]
    tendon_surface_points(x, offsets, pts)
    side = 1.0 if offsets[guide_idx] > 0.0 else -1.0
    m1 = _taut_span(pts, 0, guide_idx, side, chain)
    m2 = _taut_span(pts, guide_idx, n - 1, side, chain[m1 - 1:])
    m = m1 + m2 - 1  # guide shared between the two spans
    length = 0.0
    for k in range(1, m):
        dx = pts[chain[k], 0] - pts[chain[k - 1], 0]
        dy = pts[chain[k], 1] - pts[chain[k - 1], 1]
        length += np.sqrt(dx * dx + dy * dy)
    return m, length


@njit(cache=True)
def tendon_length_kernel(x, guide_idx, offsets):
    pts = np.empty((x.shape[0], 2))
    chain = np.empty(x.shape[0] + 1, dtype=np.int64)
    m, length = _tendon_chain(x, guide_idx, offsets, pts, chain)
    return length


@njit(cache=True)
def _apply_at_offset(x, j, rx, ry, fx, fy, a, b, f_out):
    """Force (fx, fy) acting at the point x[j] + (rx, ry) rigidly tied to
    node j.  Transferred as the same force at the node plus a couple
    realized by a force pair on nodes a and b, keeping both the net force
    and the net torque about any origin exact."""
    f_out[j, 0] += fx
    f_out[j, 1] += fy
    tau = rx * fy - ry * fx
    ex = x[a, 0] - x[b, 0]
    ey = x[a, 1] - x[b, 1]
    e2 = ex * ex + ey * ey
    if e2 < _EPS * _EPS:
        return
    # pair perpendicular to the lever arm: torque = e x p = tau, net force 0
    px = -tau * ey / e2
    py = tau * ex / e2
    f_out[a, 0] += px
    f_out[a, 1] += py
    f_out[b, 0] -= px
    f_out[b, 1] -= py


@njit(cache=True)
def tendon_force_kernel(x, guide_idx, offsets, stiffness, rest_length, f_out):
    """Unilateral tendon pull along the taut wrapped path.  Returns tension.

    Tension is uniform (frictionless contacts); at every chain point the
    string applies the difference of its two segment pulls, and each such
    force acts at the lateral surface point, so it carries a moment about
    its node (transferred as an exact force-couple onto the neighbors).
    The contact forces are what flatten a lobe that bulges into a winding
    tendon and drive the half-beam snap-throughs.
    """
    n = x.shape[0]
    pts = np.empty((n, 2))
    chain = np.empty(n + 1, dtype=np.int64)
    m, length = _tendon_chain(x, guide_idx, offsets, pts, chain)
    stretch = length - rest_length
    if stretch <= 0.0 or length < _EPS:
        return 0.0
    T = stiffness * stretch
    for k in range(m):
        j = chain[k]
        fx = 0.0
        fy = 0.0
        if k > 0:
            jp = chain[k - 1]
            dx = pts[j, 0] - pts[jp, 0]
            dy = pts[j, 1] - pts[jp, 1]
            l = np.sqrt(dx * dx + dy * dy)
            if l > _EPS:
                fx -= T * dx / l
                fy -= T * dy / l
        if k < m - 1:
            jn = chain[k + 1]
            dx = pts[jn, 0] - pts[j, 0]
            dy = pts[jn, 1] - pts[j, 1]
            l = np.sqrt(dx * dx + dy * dy)
            if l > _EPS:
                fx += T * dx / l
                fy += T * dy / l
        a = j + 1 if j < n - 1 else n - 1
        b = j - 1 if j > 0 else 0
        _apply_at_offset(x, j, pts[j, 0] - x[j, 0], pts[j, 1] - x[j, 1],
                         fx, fy, a, b, f_out)
    return T


@njit(cache=True)
def friction_force_kernel(x, v, mode, c_long, c_lat, mu_long, mu_lat,
                          normal_load, v_reg, f_out):
    """Anisotropic ground resistance per node; returns dissipation power (>= 0).

    mode 0: viscous, mode 1: tanh-regularized Coulomb.
    """
    n = x.shape[0]
    power = 0.0
    for j in range(n):
        if j == 0:
            tx = x[1, 0] - x[0, 0]
            ty = x[1, 1] - x[0, 1]
        elif j == n - 1:
            tx = x[n - 1, 0] - x[n - 2, 0]
            ty = x[n - 1, 1] - x[n - 2, 1]
        else:
            tx = x[j + 1, 0] - x[j - 1, 0]
            ty = x[j + 1, 1] - x[j - 1, 1]
        tn = np.sqrt(tx * tx + ty * ty)
        if tn < _EPS:
            continue
        tx /= tn
        ty /= tn
        nx, ny = -ty, tx
        vt = v[j, 0] * tx + v[j, 1] * ty
        vn = v[j, 0] * nx + v[j, 1] * ny
        if mode == 0:
            ft = -c_long * vt
            fn = -c_lat * vn
        else:
            ft = -mu_long * normal_load * np.tanh(vt / v_reg)
            fn = -mu_lat * normal_load * np.tanh(vn / v_reg)
        f_out[j, 0] += ft * tx + fn * nx
        f_out[j, 1] += ft * ty + fn * ny
        power += -(ft * vt + fn * vn)
    return power


@njit(cache=True)
def _integrate_step(x, v, f, f_ext, dt, mass, inv_mass, alpha, visc, quad,
                    mu_g, rest_len, EA, EI, ell_bar, beta, pin_idx, pin_pts,
                    comp_idx, comp_axis, comp_val):
    """One velocity + position update with all damping; returns dissipation."""
    n = x.shape[0]
    dissipated = 0.0
    for j in range(n):
        if inv_mass[j] == 0.0:
            continue
        m_j = mass[j]
        vx = v[j, 0] + dt * (f[j, 0] + f_ext[j, 0]) / m_j
        vy = v[j, 1] + dt * (f[j, 1] + f_ext[j, 1]) / m_j
        # the |v| factor of the quadratic term is held at the predicted
        # speed, which keeps the update a pure contraction (stable at any
        # speed) while the linear terms stay fully implicit
        c_eff = visc + quad * np.sqrt(vx * vx + vy * vy)
        gam = 1.0 + dt * (alpha + c_eff / m_j)
        v2_pred = vx * vx + vy * vy
        vx /= gam
        vy /= gam
        # exact kinetic energy removed by the implicit damping substep
        dissipated += 0.5 * m_j * (v2_pred - (vx * vx + vy * vy))
        if mu_g > 0.0:
            # Coulomb friction against the bench surface, applied as an
            # exact impulse: the friction impulse mu*g*dt either stops the
            # node (stick) or reduces its speed by a fixed amount (slip).
            speed = np.sqrt(vx * vx + vy * vy)
            if speed > 0.0:
                dv = mu_g * dt
                if speed <= dv:
                    scale = 0.0
                else:
                    scale = 1.0 - dv / speed
                v2_new = (speed * scale) ** 2
                dissipated += 0.5 * m_j * (speed * speed - v2_new)
                vx *= scale
                vy *= scale
        v[j, 0] = vx
        v[j, 1] = vy
    dissipated += apply_beta_damping(x, v, inv_mass, rest_len, EA, EI,
                                     ell_bar, beta, dt)
    for j in range(n):
        x[j, 0] += dt * v[j, 0]
        x[j, 1] += dt * v[j, 1]
    for p in range(pin_idx.shape[0]):
        j = pin_idx[p]
        x[j, 0] = pin_pts[p, 0]
        x[j, 1] = pin_pts[p, 1]
        v[j, 0] = 0.0
        v[j, 1] = 0.0
    for p in range(comp_idx.shape[0]):
        j = comp_idx[p]
        a = comp_axis[p]
        x[j, a] = comp_val[p]
        v[j, a] = 0.0
    return dissipated


@njit(cache=True)
def _make_inv_mass(mass, pin_idx):
    inv = 1.0 / mass
    for p in range(pin_idx.shape[0]):
        inv[pin_idx[p]] = 0.0
    return inv


@njit(cache=True)
def run_steps(x, v, t0, dt, n_steps,
              rest_len, EA, EI, ell_bar, mass, alpha, beta, visc, quad, mu_g,
              f_ext,
              pin_idx, pin_pts, comp_idx, comp_axis, comp_val,
              has_tendons, guide_idx, offs_left, offs_right, k_tendon,
              rl_sched, rr_sched,
              has_friction, fric_mode, c_long, c_lat, mu_long, mu_lat,
              normal_load, v_reg,
              sample_every, markers,
              out_t, out_Tl, out_Tr, out_marks, out_com):
    """Advance n_steps of damped symplectic Euler; sample into out_* buffers.

    rl_sched/rr_sched hold the commanded tendon rest lengths at every step
    boundary (length n_steps + 1).  Sample s records the state at step
    s * sample_every.  Returns (actuator_work, dissipated_energy).
    """
    n = x.shape[0]
    f = np.empty((n, 2))
    work = 0.0
    dissipated = 0.0
    total_mass = mass.sum()
    n_samp = out_t.shape[0]
    inv_mass = _make_inv_mass(mass, pin_idx)

    for p in range(pin_idx.shape[0]):
        j = pin_idx[p]
        x[j, 0] = pin_pts[p, 0]
        x[j, 1] = pin_pts[p, 1]
        v[j, 0] = 0.0
        v[j, 1] = 0.0
    for p in range(comp_idx.shape[0]):
        x[comp_idx[p], comp_axis[p]] = comp_val[p]
        v[comp_idx[p], comp_axis[p]] = 0.0

    s = 0
    for k in range(n_steps + 1):
        f[:] = 0.0
        internal_forces(x, rest_len, EA, EI, ell_bar, f)
        Tl = 0.0
        Tr = 0.0
        if has_tendons:
            Tl = tendon_force_kernel(x, guide_idx, offs_left, k_tendon,
                                     rl_sched[k], f)
            Tr = tendon_force_kernel(x, guide_idx, offs_right, k_tendon,
                                     rr_sched[k], f)
        if has_friction:
            dissipated += dt * friction_force_kernel(
                x, v, fric_mode, c_long, c_lat, mu_long, mu_lat,
                normal_load, v_reg, f)

        if k % sample_every == 0 and s < n_samp:
            out_t[s] = t0 + k * dt
            out_Tl[s] = Tl
            out_Tr[s] = Tr
            for m in range(markers.shape[0]):
                out_marks[s, m, 0] = x[markers[m], 0]
                out_marks[s, m, 1] = x[markers[m], 1]
            cx = 0.0
            cy = 0.0
            for j in range(n):
                cx += mass[j] * x[j, 0]
                cy += mass[j] * x[j, 1]
            out_com[s, 0] = cx / total_mass
            out_com[s, 1] = cy / total_mass
            s += 1
        if k == n_steps:
            break

        if has_tendons:
            work += Tl * (rl_sched[k] - rl_sched[k + 1])
            work += Tr * (rr_sched[k] - rr_sched[k + 1])

        dissipated += _integrate_step(x, v, f, f_ext, dt, mass, inv_mass,
                                      alpha, visc, quad, mu_g, rest_len, EA,
                                      EI, ell_bar, beta, pin_idx, pin_pts,
                                      comp_idx, comp_axis, comp_val)

    return work, dissipated


@njit(cache=True)
def relax_steps(x, v, dt, max_steps,
                rest_len, EA, EI, ell_bar, mass, alpha, beta, visc, quad, mu_g,
                f_ext,
                pin_idx, pin_pts, comp_idx, comp_axis, comp_val,
                has_tendons, guide_idx, offs_left, offs_right, k_tendon,
                rl_fixed, rr_fixed,
                tol_kinetic, kinetic_damping):
    """Dynamic relaxation toward static equilibrium.

    Kinetic damping (velocity zeroing at kinetic-energy peaks) is layered
    on the physical damping when requested.  Converged when total kinetic
    energy stays below tol_kinetic for 100 consecutive steps.
    Returns (steps_taken, converged).
    """
    n = x.shape[0]
    f = np.empty((n, 2))
    ke_prev = 0.0
    rising = False
    calm = 0
    inv_mass = _make_inv_mass(mass, pin_idx)

    for p in range(pin_idx.shape[0]):
        j = pin_idx[p]
        x[j, 0] = pin_pts[p, 0]
        x[j, 1] = pin_pts[p, 1]
        v[j, 0] = 0.0
        v[j, 1] = 0.0
    for p in range(comp_idx.shape[0]):
        x[comp_idx[p], comp_axis[p]] = comp_val[p]
        v[comp_idx[p], comp_axis[p]] = 0.0

    for k in range(max_steps):
        f[:] = 0.0
        internal_forces(x, rest_len, EA, EI, ell_bar, f)
        if has_tendons:
            tendon_force_kernel(x, guide_idx, offs_left, k_tendon, rl_fixed, f)
            tendon_force_kernel(x, guide_idx, offs_right, k_tendon, rr_fixed, f)
        _integrate_step(x, v, f, f_ext, dt, mass, inv_mass, alpha, visc,
                        quad, mu_g, rest_len, EA, EI, ell_bar, beta, pin_idx,
                        pin_pts, comp_idx, comp_axis, comp_val)
        ke = 0.0
        for j in range(n):
            ke += 0.5 * mass[j] * (v[j, 0] ** 2 + v[j, 1] ** 2)

        if kinetic_damping:
            if ke > ke_prev:
                rising = True
            elif rising:
                # passed a kinetic-energy peak: drop to rest
                for j in range(n):
                    v[j, 0] = 0.0
                    v[j, 1] = 0.0
                rising = False
                ke = 0.0
        ke_prev = ke

        if ke < tol_kinetic:
            calm += 1
            if calm >= 100:
                return k + 1, True
        else:
            calm = 0

    return max_steps, False
