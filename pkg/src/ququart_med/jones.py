"""Jones-calculus primitives on the polarization qubit.

Basis ordering is (|H>, |V>). Matrices are plain ``(2, 2)`` complex numpy
arrays and polarization vectors are ``(2,)`` complex arrays. Angles are in
radians; global phases are dropped everywhere, so matrix comparisons should go
through :func:`fidelity` rather than element-wise equality.

Conventions
-----------
* ``hwp(t) = [[cos 2t, sin 2t], [sin 2t, -cos 2t]]``
* ``qwp(t) = R(t) diag(1, i) R(-t)`` so that ``qwp(0) = diag(1, i)``
* ``rotation_s3(a)`` rotates the Poincare sphere by ``a`` about the circular
  (S3) axis, i.e. in the plane containing |H> and |+>.
"""

import numpy as np

H = np.array([1.0, 0.0], dtype=complex)
V = np.array([0.0, 1.0], dtype=complex)
PLUS = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2)
MINUS = np.array([1.0, -1.0], dtype=complex) / np.sqrt(2)
IDENTITY = np.eye(2, dtype=complex)


def _rot(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]], dtype=complex)


def hwp(theta):
    """Half-wave plate with its fast axis at ``theta`` from H."""
    c, s = np.cos(2 * theta), np.sin(2 * theta)
    return np.array([[c, s], [s, -c]], dtype=complex)


def qwp(theta):
    """Quarter-wave plate with its fast axis at ``theta`` from H."""
    r = _rot(theta)
    return r @ np.diag([1.0, 1j]) @ r.T


def phase_shift(phi):
    """Relative H/V phase ``diag(1, exp(i phi))``."""
    return np.diag([1.0, np.exp(1j * phi)])


def rotation_s3(angle):
    # Bloch angle `angle` about S3 is a real rotation by angle/2 on (H, V).
    return _rot(angle / 2)


def compose(a, b):
    """Return ``a @ b``; ``b`` acts first."""
    return np.asarray(a) @ np.asarray(b)


def apply(m, s):
    return np.asarray(m) @ np.asarray(s)


def fidelity(a, b):
    """Phase-insensitive overlap ``|tr(a^dagger b)| / 2`` of two 2x2 operators.

    Equals 1 exactly when ``a`` and ``b`` are the same unitary up to a global
    phase.
    """
    return abs(np.trace(np.conj(np.asarray(a)).T @ np.asarray(b))) / 2


def overlap2(a, b):
    """``|<a|b>|^2`` for two Jones vectors."""
    return abs(np.vdot(a, b)) ** 2


def norm2(s):
    return float(np.real(np.vdot(s, s)))


def is_unitary(m, atol=1e-12):
    m = np.asarray(m)
    return np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))) < atol


def is_contraction(m, atol=1e-12):
    return np.linalg.svd(np.asarray(m), compute_uv=False).max() <= 1 + atol
