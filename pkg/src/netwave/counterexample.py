"""High-precision instability probes for the circuit and star networks.

The circuit probe drives the network at frequencies beta_n = 2 pi q_n +
2 pi / q_n^{1/4} built from Dirichlet convergents p_n/q_n of the cycle
length l4, where all edge angles are nearly multiples of 2 pi.  The edgewise
response is obtained two independent ways: a direct solve of the 6x6
boundary system and a scalar reduction (FB + AG) beta b1 = A H - F C whose
coefficients A..H were re-derived from that system by elimination; the two
must agree to near machine precision on every probe.

Everything runs in mpmath extended precision with exact integer angle
reduction (2 pi p_n subtracted symbolically), since sin(beta_n l4) lives on
fine Diophantine margins that double precision destroys beyond q ~ 1e6.
"""

from __future__ import annotations

from dataclasses import dataclass

import mpmath as mp

from .graph import Length

EQCIR_RTOL = 1e-10
CONVERGENT_CAP = 10_000


class CounterexampleError(RuntimeError):
    pass


class AxisEigenvalue(CounterexampleError):
    """The requested configuration has an eigenvalue on the imaginary axis."""

    def __init__(self, message, beta):
        super().__init__(message)
        self.beta = beta


@dataclass(frozen=True)
class ConvergentPair:
    """Rational approximation p/q with |q*ell - p| < 1/q."""

    p: int
    q: int


def _as_length(ell) -> Length:
    return ell if isinstance(ell, Length) else Length.parse(ell)


def _precision_for(q: int) -> int:
    return max(50, 30 + mp.mp.dps // 10 + len(str(q)) * 3)


def dirichlet_convergents(ell, count: int) -> list:
    """First `count` continued-fraction convergents of ell satisfying the
    Dirichlet inequality |q ell - p| < 1/q, in ascending q.

    Rational lengths are refused: their approximation never improves and the
    probe construction does not apply.
    """
    length = _as_length(ell)
    if length.is_rational:
        frac = length.frac
        raise AxisEigenvalue(
            f"length {frac} is rational: i*{frac.denominator}*pi is an "
            f"eigenvalue on the axis; convergent probes do not apply",
            float(frac.denominator) * mp.pi,
        )
    if not length.value > 0:
        raise CounterexampleError("length must be positive")
    out = []
    with mp.workdps(60 + 4 * count):
        target = length.mpf()
        p0, q0 = 1, 0  # convergent recurrence seeds
        p1, q1 = int(mp.floor(target)), 1
        frac = target - mp.floor(target)
        for _ in range(CONVERGENT_CAP):
            if len(out) >= count:
                return out
            if q1 > 0 and p1 > 0 and abs(q1 * target - p1) < mp.mpf(1) / q1:
                out.append(ConvergentPair(p1, q1))
            if frac == 0:
                break
            x = 1 / frac
            a = int(mp.floor(x))
            frac = x - a
            p0, p1 = p1, a * p1 + p0
            q0, q1 = q1, a * q1 + q0
    if len(out) < count:
        raise CounterexampleError(
            f"only {len(out)} convergents reachable within the iteration cap"
        )
    return out


# -- circuit probes ---------------------------------------------------------


@dataclass
class CircuitProbe:
    """One solve of the circuit boundary system at a probe frequency."""

    beta: complex  # mp.mpf really; kept generic for serialization
    l4: float
    q: int | None
    p: int | None
    a: tuple  # a_1..a_4
    b: tuple  # b_1..b_4
    coeffs: dict  # A..H of the scalar reduction
    b1_eqcir: complex
    eqcir_rel_diff: float

    @property
    def b1(self):
        return self.b[0]

    def growth_ratio(self):
        """beta * b1 normalized by (-1+i) pi^3 q^{1/4}."""
        if self.q is None:
            raise CounterexampleError("growth ratio needs a convergent probe")
        qq = mp.mpf(self.q) ** mp.mpf("0.25")
        return self.beta * self.b1 / ((-1 + 1j) * mp.pi**3 * qq)


def _circuit_angles(beta, l4_mpf, pair):
    """(theta1, theta4) congruent to beta and beta*l4 modulo 2 pi.

    With a convergent pair the 2 pi p_n part of beta*l4 is subtracted as an
    exact integer before any trigonometry.
    """
    if pair is not None:
        q = mp.mpf(pair.q)
        th1 = 2 * mp.pi / q ** mp.mpf("0.25")
        th4 = 2 * mp.pi * (q * l4_mpf - pair.p) + th1 * l4_mpf
        beta = 2 * mp.pi * q + th1
        return beta, th1, th4
    return beta, beta, beta * l4_mpf


def circuit_solve(beta, l4, pair: ConvergentPair | None = None) -> CircuitProbe:
    """Solve the circuit boundary system for the edge coefficients.

    The system couples a_1..a_4, b_1..b_4 (with b_1 = b_2 = b_3) under
    forcing -sin(beta x) on edge 2; beta may instead be derived from a
    Dirichlet convergent pair as beta = 2 pi q + 2 pi q^{-1/4}.  Returns the
    full solution together with the scalar-reduction coefficients and the
    consistency defect between the two solution paths.
    """
    length = _as_length(l4)
    if length.is_rational and pair is None:
        raise AxisEigenvalue(
            f"cycle length {length.frac} is rational: "
            f"i*{length.frac.denominator}*pi is an eigenvalue on the axis",
            float(length.frac.denominator) * mp.pi,
        )
    dps = _precision_for(pair.q if pair is not None else 1)
    with mp.workdps(dps):
        l4v = length.mpf()
        beta, th1, th4 = _circuit_angles(mp.mpf(beta or 0), l4v, pair)
        i = mp.mpc(0, 1)
        s, c = mp.sin(th1), mp.cos(th1)
        s4, c4 = mp.sin(th4), mp.cos(th4)
        E = mp.exp(-i * th1)

        # boundary and transmission conditions; unknowns (a1,b1,a2,a3,a4,b4)
        M = mp.matrix(6, 6)
        r = mp.matrix(6, 1)
        M[0, 0] = s
        M[0, 1] = c
        M[1, 0] = beta
        M[1, 1] = i * beta
        M[1, 2] = beta
        M[1, 3] = beta
        r[1] = 1 / (2 * beta)
        M[2, 2] = s
        M[2, 1] = c
        M[2, 5] = -1
        r[2] = c / (2 * beta)
        M[3, 4] = beta
        M[3, 1] = beta * s
        M[3, 2] = -beta * c
        M[3, 5] = i * beta
        r[3] = s / 2 - c / (2 * beta)
        M[4, 3] = s
        M[4, 1] = c
        M[4, 4] = -s4
        M[4, 5] = -c4
        M[5, 3] = beta * E
        M[5, 5] = -beta * s4
        M[5, 4] = beta * c4
        M[5, 1] = -i * beta * E
        try:
            x = mp.lu_solve(M, r)
        except ZeroDivisionError:
            raise CounterexampleError(
                f"boundary system singular at beta={beta}: resonance"
            ) from None
        a1, b1, a2, a3, a4, b4 = x

        # scalar reduction coefficients, re-derived by eliminating
        # (a1, b4, a4, a3) so that (F B + A G) beta b1 = A H - F C
        A = (1 + c4) * s + E * s4
        B = (2 - c4) * c + i * (E * s4 - s)
        C = s / (2 * beta) - (s / 2 + i * c / 2 - c / (2 * beta)) * s4 + c * c4 / 2
        F = E * (c4 - 1) - s * s4
        G = E * (c / s - 2 * i) - c * s4 - i * E * c4
        H = (
            -E / (2 * beta)
            - c * s4 / 2
            - s * c4 / 2
            + c * c4 / (2 * beta)
            - i * c * c4 / 2
        )
        b1_ec = (A * H - F * C) / ((F * B + A * G) * beta)
        rel = float(abs(b1_ec - b1) / abs(b1)) if b1 != 0 else mp.inf
        return CircuitProbe(
            beta=beta,
            l4=float(l4v),
            q=pair.q if pair is not None else None,
            p=pair.p if pair is not None else None,
            a=(a1, a2, a3, a4),
            b=(b1, b1, b1, b4),
            coeffs={"A": A, "B": B, "C": C, "F": F, "G": G, "H": H},
            b1_eqcir=b1_ec,
            eqcir_rel_diff=rel,
        )


def bracketing_angles(pair: ConvergentPair, l4) -> tuple:
    """(lambda_n, theta_n, mu_n) with theta_n = beta_n l4 - 2 pi p_n.

    For large enough q the reduced angle theta_n is bracketed as
    0 < lambda_n < theta_n < mu_n < pi/2 where
    lambda_n, mu_n = -+ 2 pi / q + 2 pi l4 / q^{1/4}.
    """
    length = _as_length(l4)
    with mp.workdps(_precision_for(pair.q)):
        l4v = length.mpf()
        q = mp.mpf(pair.q)
        qq = q ** mp.mpf("0.25")
        theta = 2 * mp.pi * (q * l4v - pair.p) + 2 * mp.pi * l4v / qq
        lam = -2 * mp.pi / q + 2 * mp.pi * l4v / qq
        mu = 2 * mp.pi / q + 2 * mp.pi * l4v / qq
        return lam, theta, mu


def asymptotic_defects(probe: CircuitProbe) -> dict:
    """Relative distance of A..H from their leading-order forms.

    The leading forms follow from the probe angles th1, th4 -> 0:
    A ~ 2 pi (2+l4) q^{-1/4}, B ~ 1, C ~ 1/2, F ~ -2 pi^2 l4 (l4+2) q^{-1/2},
    G ~ q^{1/4}/(2 pi) - 4i, H ~ -i/2.
    """
    if probe.q is None:
        raise CounterexampleError("asymptotics need a convergent probe")
    with mp.workdps(_precision_for(probe.q)):
        q = mp.mpf(probe.q)
        l4 = mp.mpf(probe.l4)
        qq = q ** mp.mpf("0.25")
        i = mp.mpc(0, 1)
        leading = {
            "A": 2 * mp.pi * (2 + l4) / qq,
            "B": mp.mpf(1),
            "C": mp.mpf(1) / 2,
            "F": -2 * mp.pi**2 * l4 * (l4 + 2) / mp.sqrt(q),
            "G": qq / (2 * mp.pi) - 4 * i,
            "H": -i / mp.mpf(2),
        }
        return {
            k: float(abs(probe.coeffs[k] - leading[k]) / abs(leading[k]))
            for k in leading
        }


@dataclass
class GrowthReport:
    """Per-probe growth ratios and their extrapolated limit."""

    ratios: list  # complex ratio per probe, ascending q
    qs: list
    limit: complex
    predicted: float  # modulus of the target constant 2 l4 (2 l4+1)/(l4+2)
    verdict: str  # "non-exponential" | "inconclusive"


def growth_law(probes: list, l4) -> GrowthReport:
    """Extrapolate beta_n b_1 / ((-1+i) pi^3 q_n^{1/4}) over a probe ladder.

    Richardson extrapolation in q^{-1/4}; verdict "non-exponential" when the
    ratios stabilize within 10% of the target constant
    2 l4 (2 l4 + 1)/(l4 + 2), "inconclusive" otherwise.
    """
    length = _as_length(l4)
    if length.is_rational:
        raise AxisEigenvalue(
            f"cycle length {length.frac} is rational: "
            f"i*{length.frac.denominator}*pi is an eigenvalue on the axis",
            float(length.frac.denominator) * mp.pi,
        )
    probes = sorted(
        (pr for pr in probes if pr.q is not None), key=lambda pr: pr.q
    )
    if len(probes) < 3:
        raise CounterexampleError("need at least 3 convergent probes")
    ratios = [complex(pr.growth_ratio()) for pr in probes]
    qs = [pr.q for pr in probes]
    x = [q ** -0.25 for q in qs]
    # one Richardson step on the last pair, assuming error ~ q^{-1/4}
    r1, r0 = ratios[-1], ratios[-2]
    x1, x0 = x[-1], x[-2]
    limit = (r1 * x0 - r0 * x1) / (x0 - x1)
    l4v = float(length.value)
    predicted = 2 * l4v * (2 * l4v + 1) / (l4v + 2)
    tail = ratios[-3:]
    near = all(abs(abs(r) - predicted) <= 0.1 * predicted for r in tail)
    verdict = "non-exponential" if near else "inconclusive"
    return GrowthReport(ratios, qs, limit, predicted, verdict)


# -- star probe -------------------------------------------------------------


def _trig_poly_norm2(P, Q, beta, L):
    """integral over (0, L) of |P(x) sin(beta x) + Q(x) cos(beta x)|^2.

    P, Q are low-degree polynomials given as complex coefficient sequences
    (constant first).  Uses closed-form moments of x^k cos/sin(2 beta x).
    """
    deg = max(len(P), len(Q)) - 1
    w = 2 * beta

    # base integrals int_0^L x^k cos(w x), int x^k sin(w x)
    def I(k):  # cos moment
        if k == 0:
            return mp.sin(w * L) / w
        if k == 1:
            return L * mp.sin(w * L) / w + (mp.cos(w * L) - 1) / w**2
        return (
            L**2 * mp.sin(w * L) / w
            + 2 * L * mp.cos(w * L) / w**2
            - 2 * mp.sin(w * L) / w**3
        )

    def J(k):  # sin moment
        if k == 0:
            return (1 - mp.cos(w * L)) / w
        if k == 1:
            return -L * mp.cos(w * L) / w + mp.sin(w * L) / w**2
        return (
            -(L**2) * mp.cos(w * L) / w
            + 2 * L * mp.sin(w * L) / w**2
            + 2 * (mp.cos(w * L) - 1) / w**3
        )

    def xm(k):  # plain moment
        return L ** (k + 1) / (k + 1)

    def poly_prod(u, v):
        out = [mp.mpc(0)] * (len(u) + len(v) - 1)
        for ii, uu in enumerate(u):
            for jj, vv in enumerate(v):
                out[ii + jj] += uu * mp.conj(vv)
        return out

    def herm(u, v):  # real part of sum u_i conj(v_j) x^{i+j}
        return [uv for uv in poly_prod(u, v)]

    PP = herm(P, P)
    QQ = herm(Q, Q)
    PQ = herm(P, Q)
    total = mp.mpf(0)
    for k, coef in enumerate(PP):  # |P|^2 sin^2 = |P|^2 (1 - cos)/2
        total += mp.re(coef) * (xm(k) - I(k)) / 2
    for k, coef in enumerate(QQ):
        total += mp.re(coef) * (xm(k) + I(k)) / 2
    for k, coef in enumerate(PQ):  # 2 Re(P conj Q) sin cos = Re(..) sin(2bx)
        total += mp.re(coef) * J(k)
    return total


@dataclass
class StarProbe:
    beta: float
    l3: float
    norm_ratio: float  # ||z||_H / ||f||_H, a lower bound for the resolvent norm
    center_value: complex
    coefficients: dict


def star_probe(beta, l3, pair: ConvergentPair | None = None) -> StarProbe:
    """Exact response of the three-edge star to forcing -sin(beta x) on a
    clamped edge; returns the norm amplification ||z|| / ||f||.

    Geometry: edges 1, 2 of unit length and edge 3 of length l3 joined at a
    center mass; edge 1 carries the absorbing end, edges 2 and 3 are clamped.
    A length l3 in pi * N is refused: i is then an eigenvalue on the axis.
    """
    length = _as_length(l3)
    if length.pi_multiple() is not None:
        raise AxisEigenvalue(
            f"edge length {length.frac}*pi puts an eigenvalue at i on the axis",
            1.0,
        )
    dps = _precision_for(pair.q if pair is not None else 1)
    with mp.workdps(dps):
        l3v = length.mpf()
        i = mp.mpc(0, 1)
        if pair is not None:
            q = mp.mpf(pair.q)
            beta = 2 * mp.pi * q + 2 * mp.pi / q ** mp.mpf("0.25")
            th = 2 * mp.pi / q ** mp.mpf("0.25")
            th3 = 2 * mp.pi * (q * l3v - pair.p) + th * l3v
        else:
            beta = mp.mpf(beta)
            th = beta
            th3 = beta * l3v
        s, c = mp.sin(th), mp.cos(th)
        s3, c3 = mp.sin(th3), mp.cos(th3)

        # unknowns (a1, a2, a3, Y): y^j = a_j sin(beta x) + Y cos(beta x),
        # edge 2 adds the particular response -x cos(beta x)/(2 beta)
        M = mp.matrix(4, 4)
        r = mp.matrix(4, 1)
        # absorbing end of edge 1: y'(1) = -i beta y(1)
        M[0, 0] = beta * c + i * beta * s
        M[0, 3] = -beta * s + i * beta * c
        # clamped ends
        M[1, 1] = s
        M[1, 3] = c
        r[1] = c / (2 * beta)
        M[2, 2] = s3
        M[2, 3] = c3
        # center flux with the oscillator eliminated:
        # sum_j y_j'(0) = beta^2 Y / (1 - beta^2)
        M[3, 0] = beta
        M[3, 1] = beta
        M[3, 2] = beta
        M[3, 3] = -(beta**2) / (1 - beta**2)
        r[3] = 1 / (2 * beta)
        try:
            a1, a2, a3, Y = mp.lu_solve(M, r)
        except ZeroDivisionError:
            raise CounterexampleError(
                f"star system singular at beta={beta}: resonance"
            ) from None

        # H-norm of z = (y, v = i beta y, p, q):
        # per edge int(|y'|^2 + beta^2 |y|^2) plus |p|^2 + |q|^2
        total = mp.mpf(0)
        for (aj, lj, extra) in (
            (a1, mp.mpf(1), False),
            (a2, mp.mpf(1), True),
            (a3, l3v, False),
        ):
            P = [aj]
            Q = [Y]
            dP = [-beta * Y]
            dQ = [beta * aj]
            if extra:  # particular part -x cos(beta x)/(2 beta) of edge 2
                Q = [Y, -1 / (2 * beta)]
                dP = [-beta * Y, mp.mpf(1) / 2]
                dQ = [beta * aj - 1 / (2 * beta)]
            total += _trig_poly_norm2(dP, dQ, beta, lj)
            total += beta**2 * _trig_poly_norm2(P, Q, beta, lj)
        p_osc = -i * beta * Y / (1 - beta**2)
        q_osc = i * beta * p_osc
        total += abs(p_osc) ** 2 + abs(q_osc) ** 2
        fnorm = mp.sqrt(mp.mpf(1) / 2 - mp.sin(2 * beta) / (4 * beta))
        ratio = float(mp.sqrt(total) / fnorm)
        return StarProbe(
            beta=float(beta),
            l3=float(l3v),
            norm_ratio=ratio,
            center_value=complex(Y),
            coefficients={"a1": complex(a1), "a2": complex(a2), "a3": complex(a3)},
        )
