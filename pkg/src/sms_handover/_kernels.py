"""Compiled multibody kernels shared by kinematics, dynamics and the integrator.

Every kernel takes the packed model tuple produced by
``SystemModel.packed`` (unpacked as ``*packed``)::

    base_mass, base_inertia, mount_pos, mount_rot, tool, arm_start,
    axes, joint_to_com, com_to_next, masses, inertias, armature

``armature`` is the reflected rotor inertia of each joint about its own axis;
it adds to the diagonal of H and to the kinetic energy only.

Coordinates: ``q[0:3]`` base CoM position, ``q[3:6]`` intrinsic X-Y-Z Euler
angles, then arm A joints, then arm B joints.
"""
import numpy as np
from numba import njit


@njit(cache=True)
def cross(a, b):
    out = np.empty(3)
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]
    return out


@njit(cache=True)
def dot(a, b):
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


@njit(cache=True)
def mv(A, x):
    out = np.empty(3)
    for i in range(3):
        out[i] = A[i, 0] * x[0] + A[i, 1] * x[1] + A[i, 2] * x[2]
    return out


@njit(cache=True)
def mm(A, B):
    out = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            out[i, j] = A[i, 0] * B[0, j] + A[i, 1] * B[1, j] + A[i, 2] * B[2, j]
    return out


@njit(cache=True)
def rotate_inertia(R, I):
    """R I R^T."""
    RI = mm(R, I)
    out = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            out[i, j] = RI[i, 0] * R[j, 0] + RI[i, 1] * R[j, 1] + RI[i, 2] * R[j, 2]
    return out


@njit(cache=True)
def axis_angle(axis, angle):
    c = np.cos(angle)
    s = np.sin(angle)
    t = 1.0 - c
    x, y, z = axis[0], axis[1], axis[2]
    R = np.empty((3, 3))
    R[0, 0] = t * x * x + c
    R[0, 1] = t * x * y - s * z
    R[0, 2] = t * x * z + s * y
    R[1, 0] = t * x * y + s * z
    R[1, 1] = t * y * y + c
    R[1, 2] = t * y * z - s * x
    R[2, 0] = t * x * z - s * y
    R[2, 1] = t * y * z + s * x
    R[2, 2] = t * z * z + c
    return R


@njit(cache=True)
def base_frame(euler, euler_rates):
    """Base DCM, Euler rate matrix, angular velocity and velocity-product angular acceleration."""
    cr, sr = np.cos(euler[0]), np.sin(euler[0])
    cp, sp = np.cos(euler[1]), np.sin(euler[1])
    cy, sy = np.cos(euler[2]), np.sin(euler[2])
    Rx = np.array([[1.0, 0.0, 0.0], [0.0, cr, -sr], [0.0, sr, cr]])
    Ry = np.array([[cp, 0.0, sp], [0.0, 1.0, 0.0], [-sp, 0.0, cp]])
    Rz = np.array([[cy, -sy, 0.0], [sy, cy, 0.0], [0.0, 0.0, 1.0]])
    R = mm(mm(Rx, Ry), Rz)
    E = np.empty((3, 3))
    a1 = np.array([1.0, 0.0, 0.0])
    a2 = np.array([0.0, cr, sr])
    a3 = np.array([sp, -sr * cp, cr * cp])
    for r in range(3):
        E[r, 0] = a1[r]
        E[r, 1] = a2[r]
        E[r, 2] = a3[r]
    w1 = a1 * euler_rates[0]
    w12 = w1 + a2 * euler_rates[1]
    omega = w12 + a3 * euler_rates[2]
    # d/dt of the moving axes a2, a3 at zero Euler accelerations
    alpha = cross(w1, a2) * euler_rates[1] + cross(w12, a3) * euler_rates[2]
    return R, E, omega, alpha


@njit(cache=True)
def chain(q, qd, base_mass, base_inertia, mount_pos, mount_rot, tool, arm_start,
          axes, joint_to_com, com_to_next, masses, inertias, armature):
    """Forward recursion over both arms.

    Returns per-link rotation, joint position, CoM position, world joint axis,
    angular velocity, CoM velocity, and the velocity-product (zero joint
    acceleration) angular/linear accelerations, plus the base frame data.
    """
    n = arm_start[2]
    R = np.empty((n, 3, 3))
    p = np.empty((n, 3))
    c = np.empty((n, 3))
    z = np.empty((n, 3))
    w = np.empty((n, 3))
    v = np.empty((n, 3))
    al = np.empty((n, 3))
    ac = np.empty((n, 3))
    r0 = q[0:3].copy()
    v0 = qd[0:3].copy()
    R0, E, w0, al0 = base_frame(q[3:6], qd[3:6])
    for k in range(2):
        for i in range(arm_start[k], arm_start[k + 1]):
            if i == arm_start[k]:
                Rp = mm(R0, mount_rot[k])
                r = mv(R0, mount_pos[k])
                cp_ = r0
                vp_ = v0
                wp = w0
                alp = al0
                acp = np.zeros(3)
            else:
                Rp = R[i - 1]
                r = mv(Rp, com_to_next[i - 1])
                cp_ = c[i - 1]
                vp_ = v[i - 1]
                wp = w[i - 1]
                alp = al[i - 1]
                acp = ac[i - 1]
            p[i] = cp_ + r
            vj = vp_ + cross(wp, r)
            aj = acp + cross(alp, r) + cross(wp, cross(wp, r))
            zi = mv(Rp, axes[i])
            z[i] = zi
            R[i] = mm(Rp, axis_angle(axes[i], q[6 + i]))
            rel = zi * qd[6 + i]
            w[i] = wp + rel
            al[i] = alp + cross(wp, rel)
            rc = mv(R[i], joint_to_com[i])
            c[i] = p[i] + rc
            v[i] = vj + cross(w[i], rc)
            ac[i] = aj + cross(al[i], rc) + cross(w[i], cross(w[i], rc))
    return R0, E, w0, al0, R, p, c, z, w, v, al, ac


@njit(cache=True)
def point_jacobian(x, k, last, q, E, p, z, arm_start):
    """6 x ndof Jacobian of a point ``x`` rigidly attached to link ``last`` of arm ``k``."""
    ndof = 6 + arm_start[2]
    J = np.zeros((6, ndof))
    r0 = q[0:3]
    for j in range(3):
        J[j, j] = 1.0
        col = cross(E[:, j].copy(), x - r0)
        for r in range(3):
            J[r, 3 + j] = col[r]
            J[3 + r, 3 + j] = E[r, j]
    for l in range(arm_start[k], last + 1):
        col = cross(z[l], x - p[l])
        for r in range(3):
            J[r, 6 + l] = col[r]
            J[3 + r, 6 + l] = z[l, r]
    return J


@njit(cache=True)
def mass_and_bias(q, qd, base_mass, base_inertia, mount_pos, mount_rot, tool, arm_start,
                  axes, joint_to_com, com_to_next, masses, inertias, armature):
    """Inertia matrix H(q) and velocity-product forces C(q, qd) qd.

    H is accumulated as sum of J_v^T m J_v + J_w^T I_world J_w over bodies;
    the bias is the projection of each body's zero-acceleration inertial
    wrench (m a, I alpha + w x I w) through the same Jacobians.
    """
    R0, E, w0, al0, R, p, c, z, w, v, al, ac = chain(
        q, qd, base_mass, base_inertia, mount_pos, mount_rot, tool, arm_start,
        axes, joint_to_com, com_to_next, masses, inertias, armature)
    ndof = 6 + arm_start[2]
    H = np.zeros((ndof, ndof))
    b = np.zeros(ndof)
    r0 = q[0:3]
    # base: J_v = [I 0 0], J_w = [0 E 0]
    Ib = rotate_inertia(R0, base_inertia)
    for i in range(3):
        H[i, i] = base_mass
    torque0 = mv(Ib, al0) + cross(w0, mv(Ib, w0))
    IE = mm(Ib, E)
    for i in range(3):
        for j in range(3):
            H[3 + i, 3 + j] += E[0, i] * IE[0, j] + E[1, i] * IE[1, j] + E[2, i] * IE[2, j]
        b[3 + i] += E[0, i] * torque0[0] + E[1, i] * torque0[1] + E[2, i] * torque0[2]
    cols = np.empty(6 + arm_start[2], dtype=np.int64)
    Jv = np.zeros((3, ndof))
    Jw = np.zeros((3, ndof))
    for k in range(2):
        for i in range(arm_start[k], arm_start[k + 1]):
            x = c[i]
            d0 = x - r0
            nc = 0
            for j in range(3):
                cols[nc] = j
                Jv[0, nc] = 0.0
                Jv[1, nc] = 0.0
                Jv[2, nc] = 0.0
                Jv[j, nc] = 1.0
                Jw[0, nc] = 0.0
                Jw[1, nc] = 0.0
                Jw[2, nc] = 0.0
                nc += 1
            for j in range(3):
                e = E[:, j].copy()
                col = cross(e, d0)
                cols[nc] = 3 + j
                for r in range(3):
                    Jv[r, nc] = col[r]
                    Jw[r, nc] = e[r]
                nc += 1
            for l in range(arm_start[k], i + 1):
                col = cross(z[l], x - p[l])
                cols[nc] = 6 + l
                for r in range(3):
                    Jv[r, nc] = col[r]
                    Jw[r, nc] = z[l, r]
                nc += 1
            Iw = rotate_inertia(R[i], inertias[i])
            m = masses[i]
            IwJ = np.empty((3, nc))
            for r in range(3):
                for a in range(nc):
                    IwJ[r, a] = Iw[r, 0] * Jw[0, a] + Iw[r, 1] * Jw[1, a] + Iw[r, 2] * Jw[2, a]
            f = m * ac[i]
            Iww = mv(Iw, w[i])
            tq = mv(Iw, al[i]) + cross(w[i], Iww)
            for a in range(nc):
                ca = cols[a]
                b[ca] += Jv[0, a] * f[0] + Jv[1, a] * f[1] + Jv[2, a] * f[2] \
                    + Jw[0, a] * tq[0] + Jw[1, a] * tq[1] + Jw[2, a] * tq[2]
                for bb in range(a, nc):
                    cb = cols[bb]
                    h = m * (Jv[0, a] * Jv[0, bb] + Jv[1, a] * Jv[1, bb] + Jv[2, a] * Jv[2, bb]) \
                        + Jw[0, a] * IwJ[0, bb] + Jw[1, a] * IwJ[1, bb] + Jw[2, a] * IwJ[2, bb]
                    H[ca, cb] += h
    for i in range(arm_start[2]):
        H[6 + i, 6 + i] += armature[i]
    # fill the lower triangle from the accumulated upper one
    for i in range(ndof):
        for j in range(i + 1, ndof):
            H[j, i] = H[i, j]
    return H, b


@njit(cache=True)
def cholesky_solve(H, rhs):
    """Solve H x = rhs by Cholesky. Returns (x, ok); ok is False if H is not positive definite."""
    n = H.shape[0]
    L = np.zeros((n, n))
    for j in range(n):
        s = H[j, j]
        for k in range(j):
            s -= L[j, k] * L[j, k]
        if not s > 0.0:
            return np.zeros(n), False
        L[j, j] = np.sqrt(s)
        for i in range(j + 1, n):
            t = H[i, j]
            for k in range(j):
                t -= L[i, k] * L[j, k]
            L[i, j] = t / L[j, j]
    y = np.empty(n)
    for i in range(n):
        t = rhs[i]
        for k in range(i):
            t -= L[i, k] * y[k]
        y[i] = t / L[i, i]
    x = np.empty(n)
    for i in range(n - 1, -1, -1):
        t = y[i]
        for k in range(i + 1, n):
            t -= L[k, i] * x[k]
        x[i] = t / L[i, i]
    return x, True


@njit(cache=True)
def accel(q, qd, Q, base_mass, base_inertia, mount_pos, mount_rot, tool, arm_start,
          axes, joint_to_com, com_to_next, masses, inertias, armature):
    H, b = mass_and_bias(q, qd, base_mass, base_inertia, mount_pos, mount_rot, tool,
                         arm_start, axes, joint_to_com, com_to_next, masses, inertias, armature)
    return cholesky_solve(H, Q - b)


@njit(cache=True)
def rk4_step(q, qd, Q, dt, base_mass, base_inertia, mount_pos, mount_rot, tool, arm_start,
             axes, joint_to_com, com_to_next, masses, inertias, armature):
    """One classic RK4 step of (q, qd) with generalized forces held constant."""
    k1v, ok1 = accel(q, qd, Q, base_mass, base_inertia, mount_pos, mount_rot, tool,
                     arm_start, axes, joint_to_com, com_to_next, masses, inertias, armature)
    k1x = qd
    q2 = q + 0.5 * dt * k1x
    v2 = qd + 0.5 * dt * k1v
    k2v, ok2 = accel(q2, v2, Q, base_mass, base_inertia, mount_pos, mount_rot, tool,
                     arm_start, axes, joint_to_com, com_to_next, masses, inertias, armature)
    q3 = q + 0.5 * dt * v2
    v3 = qd + 0.5 * dt * k2v
    k3v, ok3 = accel(q3, v3, Q, base_mass, base_inertia, mount_pos, mount_rot, tool,
                     arm_start, axes, joint_to_com, com_to_next, masses, inertias, armature)
    q4 = q + dt * v3
    v4 = qd + dt * k3v
    k4v, ok4 = accel(q4, v4, Q, base_mass, base_inertia, mount_pos, mount_rot, tool,
                     arm_start, axes, joint_to_com, com_to_next, masses, inertias, armature)
    qn = q + dt / 6.0 * (k1x + 2.0 * v2 + 2.0 * v3 + v4)
    vn = qd + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
    return qn, vn, ok1 and ok2 and ok3 and ok4


@njit(cache=True)
def energy_momentum(q, qd, base_mass, base_inertia, mount_pos, mount_rot, tool, arm_start,
                    axes, joint_to_com, com_to_next, masses, inertias, armature):
    """Direct body sums: kinetic energy, linear momentum, angular momentum about the system CoM, CoM."""
    R0, E, w0, al0, R, p, c, z, w, v, al, ac = chain(
        q, qd, base_mass, base_inertia, mount_pos, mount_rot, tool, arm_start,
        axes, joint_to_com, com_to_next, masses, inertias, armature)
    Ib = rotate_inertia(R0, base_inertia)
    r0 = q[0:3]
    v0 = qd[0:3]
    mtot = base_mass
    mr = base_mass * r0
    for i in range(arm_start[2]):
        mtot += masses[i]
        mr = mr + masses[i] * c[i]
    com = mr / mtot
    T = 0.5 * base_mass * dot(v0, v0) + 0.5 * dot(w0, mv(Ib, w0))
    P = base_mass * v0
    L = cross(r0 - com, base_mass * v0) + mv(Ib, w0)
    for i in range(arm_start[2]):
        Iw = rotate_inertia(R[i], inertias[i])
        mvi = masses[i] * v[i]
        Iwi = mv(Iw, w[i])
        T += 0.5 * dot(mvi, v[i]) + 0.5 * dot(w[i], Iwi)
        P = P + mvi
        L = L + cross(c[i] - com, mvi) + Iwi
        T += 0.5 * armature[i] * qd[6 + i] * qd[6 + i]
    return T, P, L, com
