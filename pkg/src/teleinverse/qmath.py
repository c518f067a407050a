"""Dense complex linear algebra and small-register quantum state helpers.

States are plain 1-D complex numpy arrays of length ``2**n`` and operators
are square complex matrices; nothing here is wrapped in a class.  The
register is capped at three qubits, which is all the inversion protocol
ever needs, so double precision is ample everywhere.

Index convention: qubit 0 is the *most significant* bit of a basis-state
index, so ``kron(A, B)`` applies ``A`` to the more significant subsystem
and ``ket("01")`` has amplitude 1 at index 1.

All functions are pure and never mutate their arguments; values may be
shared freely between threads or processes.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

#: Tolerance for exact-algebra checks (unitarity, normalization).
ATOL = 1e-12

#: Hard cap on register width.
MAX_QUBITS = 3

ID2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)

for _m in (ID2, X, Y, Z):
    _m.setflags(write=False)


@dataclass(frozen=True)
class UnitaryParams:
    """Three-angle parameterization of an arbitrary single-qubit unitary.

    ``theta`` controls the mixing between the basis states and ``phi1``,
    ``phi2`` are relative phases; see :func:`realize_unitary` for the
    matrix template.  Angles are in radians.
    """

    theta: float
    phi1: float
    phi2: float


def realize_unitary(params: UnitaryParams) -> np.ndarray:
    """Build the 2x2 unitary for ``params``.

    The template is::

        [[cos(theta),            sin(theta) e^{i phi2}          ],
         [sin(theta) e^{i phi1}, -cos(theta) e^{i (phi1 + phi2)}]]

    which is unitary for every choice of angles and covers every
    single-qubit unitary up to a global phase.
    """
    c = math.cos(params.theta)
    s = math.sin(params.theta)
    e1 = cmath.exp(1j * params.phi1)
    e2 = cmath.exp(1j * params.phi2)
    return np.array([[c, s * e2], [s * e1, -c * e1 * e2]], dtype=complex)


def random_unitary_params(rng: np.random.Generator, haar: bool = False) -> UnitaryParams:
    """Sample random ``UnitaryParams``.

    The default draws ``theta`` uniformly on [0, pi/2] and both phases
    uniformly on [0, 2 pi); this is a convenience distribution, not
    Haar-uniform.  With ``haar=True`` the mixing angle is drawn as
    ``theta = arcsin(sqrt(u))`` which makes the resulting unitaries
    Haar-distributed up to global phase.
    """
    if haar:
        theta = math.asin(math.sqrt(rng.random()))
    else:
        theta = rng.uniform(0.0, math.pi / 2)
    return UnitaryParams(theta, rng.uniform(0.0, 2 * math.pi), rng.uniform(0.0, 2 * math.pi))


def is_unitary(matrix: np.ndarray, tol: float = ATOL) -> bool:
    """True if ``matrix`` is square and satisfies ``max|U^dag U - I| < tol``."""
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        return False
    delta = matrix.conj().T @ matrix - np.eye(matrix.shape[0])
    return bool(np.max(np.abs(delta)) < tol)


def require_unitary(matrix: np.ndarray, name: str = "matrix", tol: float = ATOL) -> np.ndarray:
    """Return ``matrix`` as a complex array, raising ``ValueError`` if not unitary."""
    matrix = np.asarray(matrix, dtype=complex)
    if not is_unitary(matrix, tol):
        raise ValueError(f"{name} is not unitary within tolerance {tol}")
    return matrix


def conjugate_partner(u: np.ndarray) -> np.ndarray:
    """Partner ``U'`` of a 2x2 unitary ``U`` with ``U' U = det(U) I``.

    Equivalently ``U' = det(U) U^{-1}``; for unitaries the inverse is the
    conjugate transpose.  ``U'`` is the gate effectively enacted on the
    far half of a singlet when ``U`` acts on the near half, i.e. the
    inverse of ``U`` up to the global phase ``det(U)``.
    """
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2):
        raise ValueError("conjugate_partner expects a 2x2 matrix")
    u = require_unitary(u, "u")
    det = u[0, 0] * u[1, 1] - u[0, 1] * u[1, 0]
    return det * u.conj().T


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with ``a`` on the more significant subsystem."""
    return np.kron(a, b)


def num_qubits(state: np.ndarray) -> int:
    """Number of qubits of a state vector, validating the length."""
    n = int(np.size(state)).bit_length() - 1
    if 2**n != np.size(state) or not 1 <= n <= MAX_QUBITS:
        raise ValueError(
            f"state length {np.size(state)} is not a supported register size "
            f"(need 2**n with 1 <= n <= {MAX_QUBITS})"
        )
    return n


def require_state_vector(state: np.ndarray, tol: float = ATOL) -> np.ndarray:
    """Return ``state`` as a complex array, checking normalization."""
    state = np.asarray(state, dtype=complex).reshape(-1)
    num_qubits(state)
    norm2 = float(np.vdot(state, state).real)
    if abs(norm2 - 1.0) >= tol:
        raise ValueError(f"state is not normalized: sum |amp|^2 = {norm2!r}")
    return state


def require_density_matrix(rho: np.ndarray, tol: float = ATOL) -> np.ndarray:
    """Validate Hermiticity, unit trace, and positivity of a density matrix."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("density matrix must be square")
    if rho.shape[0] not in (2, 4, 8):
        raise ValueError(f"unsupported density matrix dimension {rho.shape[0]}")
    if np.max(np.abs(rho - rho.conj().T)) >= tol:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) >= tol:
        raise ValueError(f"density matrix trace is {np.trace(rho).real!r}, expected 1")
    if float(np.linalg.eigvalsh(rho).min()) < -1e-10:
        raise ValueError("density matrix has a negative eigenvalue")
    return rho


def ket(bits: str) -> np.ndarray:
    """Computational basis state from a bit string, e.g. ``ket("01")``."""
    if not bits or any(b not in "01" for b in bits):
        raise ValueError(f"invalid bit string {bits!r}")
    if len(bits) > MAX_QUBITS:
        raise ValueError(f"at most {MAX_QUBITS} qubits supported")
    state = np.zeros(2 ** len(bits), dtype=complex)
    state[int(bits, 2)] = 1.0
    return state


_BELL_KINDS = ("phi+", "phi-", "psi+", "psi-")


def bell_state(kind: str) -> np.ndarray:
    """One of the four Bell states ``phi+``, ``phi-``, ``psi+``, ``psi-``.

    ``psi-`` is the singlet ``(|01> - |10>)/sqrt(2)``, invariant up to a
    phase under any ``U (x) U``.
    """
    r = 1.0 / math.sqrt(2.0)
    if kind == "phi+":
        return np.array([r, 0, 0, r], dtype=complex)
    if kind == "phi-":
        return np.array([r, 0, 0, -r], dtype=complex)
    if kind == "psi+":
        return np.array([0, r, r, 0], dtype=complex)
    if kind == "psi-":
        return np.array([0, r, -r, 0], dtype=complex)
    raise ValueError(f"unknown Bell state {kind!r}; expected one of {_BELL_KINDS}")


def apply_gate(state: np.ndarray, gate: np.ndarray, targets: Sequence[int]) -> np.ndarray:
    """Apply ``gate`` to the listed qubits of ``state``.

    ``gate`` must be ``2**k x 2**k`` for ``k = len(targets)``; the first
    target is the most significant qubit of the gate's own index space.
    Norm is preserved whenever ``gate`` is unitary.
    """
    state = np.asarray(state, dtype=complex)
    n = num_qubits(state)
    targets = list(targets)
    if len(set(targets)) != len(targets):
        raise ValueError(f"duplicate target qubit in {targets}")
    if any(not 0 <= t < n for t in targets):
        raise ValueError(f"target out of range for {n}-qubit state: {targets}")
    gate = np.asarray(gate, dtype=complex)
    k = len(targets)
    if gate.shape != (2**k, 2**k):
        raise ValueError(f"gate shape {gate.shape} does not match {k} target qubit(s)")
    if k == n and targets == sorted(targets) and targets == list(range(n)):
        return gate @ state
    perm = targets + [q for q in range(n) if q not in targets]
    tensor = state.reshape((2,) * n).transpose(perm).reshape(2**k, -1)
    tensor = (gate @ tensor).reshape((2,) * n)
    return tensor.transpose(np.argsort(perm)).reshape(-1)


def partial_trace(matrix: np.ndarray, keep: Iterable[int], n: int) -> np.ndarray:
    """Trace out all qubits of an ``2**n``-dim operator except ``keep``."""
    keep = sorted(keep)
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.shape != (2**n, 2**n):
        raise ValueError(f"matrix shape {matrix.shape} does not match {n} qubits")
    if any(not 0 <= q < n for q in keep) or len(set(keep)) != len(keep):
        raise ValueError(f"invalid subsystem selection {keep} for {n} qubits")
    tensor = matrix.reshape((2,) * (2 * n))
    row = list(range(n))
    col = [n + q if q in keep else q for q in range(n)]
    out = [row[q] for q in keep] + [n + q for q in keep]
    reduced = np.einsum(tensor, row + col, out)
    d = 2 ** len(keep)
    return reduced.reshape(d, d)


def global_phase_fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """Phase-insensitive agreement ``|Tr(A^dag B)| / dim`` of two unitaries.

    Equals 1 exactly when ``A = e^{i alpha} B`` and 0 for orthogonal gates
    such as distinct Paulis.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    require_unitary(a, "a")
    require_unitary(b, "b")
    return float(abs(np.trace(a.conj().T @ b)) / a.shape[0])


def state_fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """Squared overlap ``|<a|b>|^2`` of two state vectors."""
    a = np.asarray(a, dtype=complex).reshape(-1)
    b = np.asarray(b, dtype=complex).reshape(-1)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(abs(np.vdot(a, b)) ** 2)


def random_state_vector(rng: np.random.Generator, n: int = 1) -> np.ndarray:
    """Haar-random pure state on ``n`` qubits."""
    if not 1 <= n <= MAX_QUBITS:
        raise ValueError(f"need 1 <= n <= {MAX_QUBITS}")
    vec = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return vec / np.linalg.norm(vec)
