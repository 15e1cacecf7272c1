"""
Continuous rational transfer functions and their discrete difference-equation
realizations.

Continuous models are kept as a gain times a product of low-order sections
(coefficients in descending powers of s).  HDD actuator models carry
coefficients around 1e9, so sections are never multiplied out in the s-domain.

Discrete filters use the backward-shift convention

    A(z^-1) y(k) = (b0 + B(z^-1)) u(k)
    A(z^-1) = 1 + a1 z^-1 + ... + an z^-n
    B(z^-1) = b1 z^-1 + ... + bm z^-m

i.e. y(k) = b0 u(k) - a1 y(k-1) - ... - an y(k-n) + b1 u(k-1) + ... + bm u(k-m).
"""

from __future__ import annotations

import math
import warnings
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.linalg import expm, matrix_balance

from .errors import NonFiniteError, PoleAtZero, UnstableDiscretization

BILINEAR = "bilinear"
ZOH = "zero-order-hold"
_METHOD_ALIASES = {
    "bilinear": BILINEAR,
    "tustin": BILINEAR,
    "zoh": ZOH,
    "zero-order-hold": ZOH,
    "zero_order_hold": ZOH,
}


def _trim(coeffs) -> np.ndarray:
    c = np.atleast_1d(np.asarray(coeffs, dtype=float))
    nz = np.flatnonzero(c)
    if len(nz) == 0:
        return np.zeros(1)
    return c[nz[0]:]


@dataclass(frozen=True)
class RationalTransferFunction:
    """gain * prod(num_i(s) / den_i(s)), each section of modest order."""

    gain: float
    sections: tuple = ()
    input_unit: str = ""
    output_unit: str = ""

    def __post_init__(self):
        secs = []
        for num, den in self.sections:
            num = _trim(num)
            den = np.atleast_1d(np.asarray(den, dtype=float))
            if den.size == 0 or den[0] == 0.0:
                raise ValueError("section denominator must have a nonzero leading coefficient")
            secs.append((tuple(num.tolist()), tuple(den.tolist())))
        object.__setattr__(self, "sections", tuple(secs))
        object.__setattr__(self, "gain", float(self.gain))
        if self.num_degree > self.den_degree:
            raise ValueError(
                f"improper transfer function: numerator degree {self.num_degree} "
                f"> denominator degree {self.den_degree}"
            )

    @property
    def num_degree(self) -> int:
        return sum(len(_trim(n)) - 1 for n, _ in self.sections)

    @property
    def den_degree(self) -> int:
        return sum(len(d) - 1 for _, d in self.sections)

    def poles(self) -> np.ndarray:
        roots = [np.roots(d) for _, d in self.sections if len(d) > 1]
        return np.concatenate(roots) if roots else np.zeros(0, dtype=complex)

    def zeros(self) -> np.ndarray:
        roots = [np.roots(n) for n, _ in self.sections if len(n) > 1]
        return np.concatenate(roots) if roots else np.zeros(0, dtype=complex)

    def evaluate(self, s: complex) -> complex:
        val = complex(self.gain)
        for num, den in self.sections:
            val *= np.polyval(num, s) / np.polyval(den, s)
        return val

    def dc_gain(self) -> float:
        val = self.gain
        for num, den in self.sections:
            d0 = den[-1]
            if d0 == 0.0:
                raise PoleAtZero("transfer function has a pole at s = 0")
            val *= num[-1] / d0
        return val

    def state_space(self):
        """Series connection of per-section controllable-canonical realizations."""
        blocks = []
        for num, den in self.sections:
            den = np.asarray(den)
            num = np.asarray(num) / den[0]
            den = den / den[0]
            n = len(den) - 1
            num = np.concatenate([np.zeros(n + 1 - len(num)), num])
            d = num[0]
            if n == 0:
                blocks.append((np.zeros((0, 0)), np.zeros((0, 1)), np.zeros((1, 0)), d))
                continue
            # companion form: x' = A x + B u, y = C x + d u
            A = np.zeros((n, n))
            A[0, :] = -den[1:]
            A[1:, :-1] = np.eye(n - 1)
            B = np.zeros((n, 1))
            B[0, 0] = 1.0
            C = (num[1:] - d * den[1:]).reshape(1, n)
            blocks.append((A, B, C, d))

        A = np.zeros((0, 0))
        B = np.zeros((0, 1))
        C = np.zeros((1, 0))
        D = self.gain
        for Ai, Bi, Ci, di in blocks:
            n0, ni = A.shape[0], Ai.shape[0]
            A_new = np.zeros((n0 + ni, n0 + ni))
            A_new[:n0, :n0] = A
            A_new[n0:, n0:] = Ai
            A_new[n0:, :n0] = Bi @ C
            B = np.vstack([B, Bi * D])
            C = np.hstack([di * C, Ci])
            A = A_new
            D = di * D
        return A, B, C, D


def dc_gain(model) -> float:
    """Static gain of a continuous or discrete model."""
    return model.dc_gain()


class DiscreteLinearFilter:
    """Difference-equation filter, see module docstring for the sign convention."""

    def __init__(self, a: Sequence[float] = (), b: Sequence[float] = (), b0: float = 0.0, Ts: float = 1.0):
        self.a = [float(x) for x in a]
        self.b = [float(x) for x in b]
        self.b0 = float(b0)
        self.Ts = float(Ts)
        self.unstable_discretization = False
        self.reset()

    def reset(self):
        self._y = deque([0.0] * len(self.a), maxlen=len(self.a))
        self._u = deque([0.0] * len(self.b), maxlen=len(self.b))

    @property
    def n(self) -> int:
        return len(self.a)

    @property
    def m(self) -> int:
        return len(self.b)

    @property
    def state(self):
        """(past outputs, past inputs), most recent first."""
        return tuple(self._y), tuple(self._u)

    def set_state(self, y_hist: Iterable[float], u_hist: Iterable[float]):
        y_hist = [float(v) for v in y_hist]
        u_hist = [float(v) for v in u_hist]
        if len(y_hist) != self.n or len(u_hist) != self.m:
            raise ValueError(f"state must hold {self.n} outputs and {self.m} inputs")
        self._y = deque(y_hist, maxlen=self.n)
        self._u = deque(u_hist, maxlen=self.m)

    def step(self, u: float) -> float:
        y = self.b0 * u
        for bi, ui in zip(self.b, self._u):
            y += bi * ui
        for ai, yi in zip(self.a, self._y):
            y -= ai * yi
        if not math.isfinite(y):
            raise NonFiniteError("filter output is not finite")
        if self.m:
            self._u.appendleft(u)
        if self.n:
            self._y.appendleft(y)
        return y

    def peek(self) -> float:
        """Next output excluding the b0 u(k) term, without advancing state."""
        y = 0.0
        for bi, ui in zip(self.b, self._u):
            y += bi * ui
        for ai, yi in zip(self.a, self._y):
            y -= ai * yi
        return y

    def simulate(self, u: Iterable[float]) -> np.ndarray:
        """Zero-state response; does not disturb this filter's state."""
        f = self.copy()
        f.reset()
        return np.array([f.step(float(v)) for v in u])

    def copy(self) -> "DiscreteLinearFilter":
        f = DiscreteLinearFilter(self.a, self.b, self.b0, self.Ts)
        f.set_state(*self.state)
        f.unstable_discretization = self.unstable_discretization
        return f

    def denominator(self) -> np.ndarray:
        """A as a polynomial in z (descending powers)."""
        return np.concatenate([[1.0], self.a])

    def poles(self) -> np.ndarray:
        return np.roots(self.denominator()) if self.n else np.zeros(0, dtype=complex)

    def dc_gain(self) -> float:
        den = 1.0 + math.fsum(self.a)
        if den == 0.0:
            raise PoleAtZero("discrete filter has a pole at z = 1")
        return (self.b0 + math.fsum(self.b)) / den

    def frequency_response(self, w) -> np.ndarray:
        """H(e^{jw}) for normalized frequency w (rad/sample)."""
        zi = np.exp(-1j * np.asarray(w, dtype=float))
        num = self.b0 + sum(bi * zi ** (i + 1) for i, bi in enumerate(self.b))
        den = 1.0 + sum(ai * zi ** (i + 1) for i, ai in enumerate(self.a))
        return num / den

    def __repr__(self):
        return f"DiscreteLinearFilter(a={self.a}, b={self.b}, b0={self.b0}, Ts={self.Ts})"


def filter_step(f: DiscreteLinearFilter, u: float) -> float:
    return f.step(u)


def _bilinear_section(num, den, c):
    """Substitute s = c (1 - q) / (1 + q), q = z^-1; ascending arrays in q."""
    order = max(len(num), len(den)) - 1
    minus = np.array([1.0, -1.0])
    plus = np.array([1.0, 1.0])

    def subst(p):
        p = np.asarray(p)
        deg = len(p) - 1
        out = np.zeros(order + 1)
        for i, coef in enumerate(p):
            j = deg - i  # power of s
            term = coef * c ** j * np.polynomial.polynomial.polypow(minus, j)
            term = np.polynomial.polynomial.polymul(term, np.polynomial.polynomial.polypow(plus, order - j))
            out[: len(term)] += term
        return out

    return subst(num), subst(den)


def _discretize_bilinear(tf: RationalTransferFunction, Ts: float):
    c = 2.0 / Ts
    P = np.polynomial.polynomial
    num = np.array([tf.gain])
    den = np.array([1.0])
    for n_s, d_s in tf.sections:
        nq, dq = _bilinear_section(n_s, d_s, c)
        # normalize per section to keep magnitudes bounded
        scale = dq[0]
        num = P.polymul(num, nq / scale)
        den = P.polymul(den, dq / scale)
    return num, den


def _discretize_zoh(tf: RationalTransferFunction, Ts: float):
    A, B, C, D = tf.state_space()
    n = A.shape[0]
    if n == 0:
        return np.array([D]), np.array([1.0])
    M = np.zeros((n + 1, n + 1))
    M[:n, :n] = A * Ts
    M[:n, n:] = B * Ts
    Mb, (scale, _) = matrix_balance(M, permute=False, separate=True)
    E = expm(Mb)
    E = E * scale[:, None] / scale[None, :]
    Ad, Bd = E[:n, :n], E[:n, n:]
    # discrete poles map exactly as exp(p Ts)
    den = np.real(np.poly(np.exp(tf.poles() * Ts)))
    num = np.real(np.poly(Ad - Bd @ C) - np.poly(Ad)) + D * den
    # descending in z -> ascending in z^-1 is the same array
    return num, den


def _match_static_gain(tf, num, den, max_correction=1e-4):
    # Both methods map s = 0 to z = 1; with slow poles 1 + sum(a) is tiny and
    # coefficient rounding alone shifts the static gain. Remove that drift.
    try:
        target = tf.dc_gain()
    except PoleAtZero:
        return num
    num_sum, den_sum = math.fsum(num), math.fsum(den)
    if target == 0.0 or num_sum == 0.0 or den_sum == 0.0:
        return num
    ratio = target * den_sum / num_sum
    if abs(ratio - 1.0) > max_correction:
        return num
    return num * ratio


def discretize(tf: RationalTransferFunction, Ts: float, method: str = ZOH) -> DiscreteLinearFilter:
    """Convert ``tf`` to a difference-equation filter at sample interval ``Ts``.

    ``method`` is ``"zero-order-hold"`` (alias ``"zoh"``) or ``"bilinear"``
    (alias ``"tustin"``).  Both map s = 0 to z = 1, so the static gain of
    models without integrators is preserved.
    """
    if not Ts > 0:
        raise ValueError("Ts must be positive")
    try:
        method = _METHOD_ALIASES[method]
    except KeyError:
        raise ValueError(f"unknown discretization method {method!r}") from None

    if method == BILINEAR:
        num, den = _discretize_bilinear(tf, Ts)
    else:
        num, den = _discretize_zoh(tf, Ts)

    k = max(len(num), len(den))
    num = np.concatenate([num, np.zeros(k - len(num))])
    den = np.concatenate([den, np.zeros(k - len(den))])
    num, den = num / den[0], den / den[0]
    num = _match_static_gain(tf, num, den)
    f = DiscreteLinearFilter(a=den[1:], b=num[1:], b0=num[0], Ts=Ts)

    cont_poles = tf.poles()
    if len(cont_poles) and np.all(cont_poles.real < 0):
        if f.n and np.max(np.abs(f.poles())) >= 1.0:
            f.unstable_discretization = True
            warnings.warn(
                "stable continuous model produced a discrete pole on or outside the unit circle",
                UnstableDiscretization,
                stacklevel=2,
            )
    return f


# Plant models: head position in micrometres per unit actuator command.
VCM_PLANT = RationalTransferFunction(
    3.548e7,
    (
        ((1.0,), (1.0, 0.0, 0.0)),
        ((5.536e8,), (1.0, 1280.0, 5.536e8)),
    ),
    input_unit="control signal",
    output_unit="um",
)

MICRO_ACTUATOR_PLANT = RationalTransferFunction(
    0.366,
    (
        ((2.975e9,), (1.0, 2450.0, 1.7e9)),
        ((1.0, 4524.0, 2.08e9), (1.0, 6032.0, 3.64e9)),
    ),
    input_unit="control signal",
    output_unit="um",
)
