"""Parameter windows for well-posedness and decay, and derived exponents.

Two constraint sets are evaluated:

* ``wellposedness``: 2/3 < alpha <= 1, 8/(3 alpha - 2) < p < 1/(C_mu eps),
  alpha/(2 alpha - 1) < q < min{2, 4 alpha/(3(2 alpha - 1))},
  3 - 2 alpha < s0 < 4 alpha/q - 8 alpha + 6.
* ``decay`` (dimension d): 2 alpha d/(6 alpha + alpha d - d - 2) < q < 2,
  alpha d/q + (d+2)/2 - alpha(d+4)/2 < s0 < 2 alpha d/q - alpha d - 6 alpha + 3 + 3d/2,
  and for d = 2 the separately stated ``decay_d2`` windows
  alpha < s0 < 4 alpha/q - 8 alpha + 6, q < min{2, 4 alpha/(3(3 alpha - 2))}.

Every inequality is strict except alpha <= 1.  Floats are compared with a
1e-12 margin; ``confirm_exact`` re-derives each verdict with
``fractions.Fraction`` through a separate code path.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

from .errors import PreconditionViolated

MARGIN = 1e-12

DISCREPANCIES = (
    "q upper bound: wellposedness uses min{2, 4α/(3(2α−1))}; decay_d2 uses min{2, 4α/(3(3α−2))}",
    "s0 lower bound: wellposedness uses 3−2α; decay_d2 uses α",
)


@dataclass
class Verdict:
    name: str
    satisfied: bool
    slack: float
    soft: bool = False
    bound: float = float("nan")


@dataclass
class AdmissibleTuple:
    d: int
    alpha: float
    p: float
    q: float
    s0: float
    epsilon: float
    constraint_set: str
    verdicts: list = field(default_factory=list)

    @property
    def passed(self):
        return all(v.satisfied for v in self.verdicts if not v.soft)

    @property
    def warnings(self):
        return [v.name for v in self.verdicts if v.soft and not v.satisfied]

    def failing(self):
        return [v.name for v in self.verdicts if not v.soft and not v.satisfied]

    def to_dict(self):
        out = asdict(self)
        out["passed"] = self.passed
        return out


def _lower(name, x, num, den):
    """x > num/den; a non-positive den makes the bound undefined (fail, slack=den)."""
    if den <= 0:
        return Verdict(name, False, float(den), bound=float("nan"))
    b = num / den
    return Verdict(name, bool(x - b > MARGIN), float(x - b), bound=float(b))


def _upper(name, x, b):
    return Verdict(name, bool(b - x > MARGIN), float(b - x), bound=float(b))


def _q_upper_wp(alpha):
    den = 3.0 * (2.0 * alpha - 1.0)
    return min(2.0, 4.0 * alpha / den) if den > 0 else 2.0


def _q_upper_d2(alpha):
    den = 3.0 * (3.0 * alpha - 2.0)
    return min(2.0, 4.0 * alpha / den) if den > 0 else 2.0


def check_wellposedness(alpha, p, q, s0, epsilon=0.0, C_mu=1.0):
    """Verdicts for the well-posedness windows; the p upper bound is soft."""
    v = [
        Verdict("alpha > 2/3", bool(alpha - 2.0 / 3.0 > MARGIN), alpha - 2.0 / 3.0, bound=2 / 3),
        Verdict("alpha <= 1", bool(1.0 - alpha >= -MARGIN), 1.0 - alpha, bound=1.0),
        _lower("p > 8/(3α−2)", p, 8.0, 3.0 * alpha - 2.0),
        Verdict("p < 1/(C_mu·ε)", bool(1.0 - epsilon * C_mu * p > MARGIN),
                1.0 - epsilon * C_mu * p, soft=True,
                bound=(1.0 / (epsilon * C_mu) if epsilon * C_mu > 0 else math.inf)),
        _lower("q > α/(2α−1)", q, alpha, 2.0 * alpha - 1.0),
        _upper("q < min{2, 4α/(3(2α−1))}", q, _q_upper_wp(alpha)),
        Verdict("s0 > 3−2α", bool(s0 - (3.0 - 2.0 * alpha) > MARGIN),
                s0 - (3.0 - 2.0 * alpha), bound=3.0 - 2.0 * alpha),
        _upper("s0 < 4α/q − 8α + 6", s0, 4.0 * alpha / q - 8.0 * alpha + 6.0),
    ]
    return AdmissibleTuple(2, alpha, p, q, s0, epsilon, "wellposedness", v)


def check_decay(d, alpha, q, s0):
    """General-dimension decay windows; for d = 2 a second tuple holds the
    separately stated two-dimensional windows.  Returns a list of tuples."""
    if d < 2:
        raise ValueError("d must be >= 2")
    lo_s = alpha * d / q + (d + 2) / 2.0 - alpha * (d + 4) / 2.0
    hi_s = 2.0 * alpha * d / q - alpha * d - 6.0 * alpha + 3.0 + 1.5 * d
    gen = [
        _lower("q > 2αd/(6α+αd−d−2)", q, 2.0 * alpha * d, 6.0 * alpha + alpha * d - d - 2.0),
        _upper("q < 2", q, 2.0),
        Verdict("s0 > αd/q + (d+2)/2 − α(d+4)/2", bool(s0 - lo_s > MARGIN), s0 - lo_s, bound=lo_s),
        _upper("s0 < 2αd/q − αd − 6α + 3 + 3d/2", s0, hi_s),
    ]
    out = [AdmissibleTuple(d, alpha, float("nan"), q, s0, 0.0, "decay", gen)]
    if d == 2:
        sp2 = [
            _lower("q > α/(2α−1)", q, alpha, 2.0 * alpha - 1.0),
            _upper("q < min{2, 4α/(3(3α−2))}", q, _q_upper_d2(alpha)),
            Verdict("s0 > α", bool(s0 - alpha > MARGIN), s0 - alpha, bound=alpha),
            _upper("s0 < 4α/q − 8α + 6", s0, 4.0 * alpha / q - 8.0 * alpha + 6.0),
        ]
        out.append(AdmissibleTuple(2, alpha, float("nan"), q, s0, 0.0, "decay_d2", sp2))
    return out


def gamma_exponent(alpha, p, gamma_range=(1.0, math.inf)):
    """gamma = 4p/(4 + 4p - 3 alpha p), defined for p > 4/(3 alpha - 2).

    Under that precondition gamma > 2 always, so the accepted range is a
    parameter rather than a fixed assertion.
    """
    if 3.0 * alpha - 2.0 <= 0 or not p > 4.0 / (3.0 * alpha - 2.0):
        raise PreconditionViolated(f"need p > 4/(3α−2) (alpha={alpha}, p={p})")
    den = 4.0 + 4.0 * p - 3.0 * alpha * p
    if den <= 0:
        raise PreconditionViolated(f"4 + 4p − 3αp = {den:.3g} <= 0 (alpha={alpha}, p={p})")
    g = 4.0 * p / den
    lo, hi = gamma_range
    if not lo < g <= hi:
        raise PreconditionViolated(f"gamma={g:.6g} outside ({lo}, {hi}]")
    return g


# ---------------------------------------------------------------- exact re-check

def _frac(x):
    """Exact rational for the decimal a float prints as (0.7 -> 7/10)."""
    return Fraction(repr(float(x)))


def _exact_conditions(t, C_mu):
    a, p, q, s, e = (_frac(t.alpha), _frac(t.p) if not math.isnan(t.p) else None,
                     _frac(t.q), _frac(t.s0), _frac(t.epsilon))
    d = Fraction(t.d)
    two = Fraction(2)
    if t.constraint_set == "wellposedness":
        c = Fraction(C_mu)
        conds = {
            "alpha > 2/3": a > Fraction(2, 3),
            "alpha <= 1": a <= 1,
            "p > 8/(3α−2)": (3 * a - 2) > 0 and p * (3 * a - 2) > 8,
            "p < 1/(C_mu·ε)": e * c * p < 1,
            "q > α/(2α−1)": (2 * a - 1) > 0 and q * (2 * a - 1) > a,
            "q < min{2, 4α/(3(2α−1))}": q < two and ((2 * a - 1) <= 0 or 3 * q * (2 * a - 1) < 4 * a),
            "s0 > 3−2α": s > 3 - 2 * a,
            "s0 < 4α/q − 8α + 6": s < 4 * a / q - 8 * a + 6,
        }
    elif t.constraint_set == "decay":
        den = 6 * a + a * d - d - 2
        conds = {
            "q > 2αd/(6α+αd−d−2)": den > 0 and q * den > 2 * a * d,
            "q < 2": q < two,
            "s0 > αd/q + (d+2)/2 − α(d+4)/2": s > a * d / q + (d + 2) / 2 - a * (d + 4) / 2,
            "s0 < 2αd/q − αd − 6α + 3 + 3d/2": s < 2 * a * d / q - a * d - 6 * a + 3 + 3 * d / 2,
        }
    else:
        conds = {
            "q > α/(2α−1)": (2 * a - 1) > 0 and q * (2 * a - 1) > a,
            "q < min{2, 4α/(3(3α−2))}": q < two and ((3 * a - 2) <= 0 or 3 * q * (3 * a - 2) < 4 * a),
            "s0 > α": s > a,
            "s0 < 4α/q − 8α + 6": s < 4 * a / q - 8 * a + 6,
        }
    return conds


def confirm_exact(t, C_mu=1.0):
    """Re-evaluate every verdict of ``t`` in rational arithmetic.

    Returns a list of constraint names where the two paths disagree.
    """
    conds = _exact_conditions(t, C_mu)
    return [v.name for v in t.verdicts if conds[v.name] != v.satisfied]


# ---------------------------------------------------------------- windows and scans

def q_window(alpha):
    """Open q-window of the well-posedness set, or None if empty/undefined."""
    if 2.0 * alpha - 1.0 <= 0:
        return None
    lo = alpha / (2.0 * alpha - 1.0)
    hi = _q_upper_wp(alpha)
    return (lo, hi) if hi - lo > MARGIN else None


def s0_window(alpha, q):
    lo = 3.0 - 2.0 * alpha
    hi = 4.0 * alpha / q - 8.0 * alpha + 6.0
    return (lo, hi) if hi - lo > MARGIN else None


def p_lower(alpha):
    return 8.0 / (3.0 * alpha - 2.0) if 3.0 * alpha - 2.0 > 0 else math.inf


def binding_constraint(alpha):
    """Name of the first constraint that empties the well-posedness region."""
    if not alpha - 2.0 / 3.0 > MARGIN:
        return "alpha > 2/3"
    if not 1.0 - alpha >= -MARGIN:
        return "alpha <= 1"
    if q_window(alpha) is None:
        return "q > α/(2α−1) vs q < min{2, 4α/(3(2α−1))}"
    return "s0 > 3−2α vs s0 < 4α/q − 8α + 6"


def _midpoints(lo, hi, n):
    return [lo + (hi - lo) * (i + 0.5) / n for i in range(n)]


def enumerate_region(alpha_grid, q_steps=8, s0_steps=8, p_samples=3, epsilon=0.0, C_mu=1.0):
    """Scan the well-posedness windows on interior grid points.

    Returns (passing tuples, per-alpha summaries).  Each summary carries the
    q-window, the s0-window at the middle q, the p lower bound, the number of
    passing points, the names of any exact-path disagreements, and the
    binding constraint when the region is empty.
    """
    passing, summaries = [], []
    for alpha in alpha_grid:
        alpha = float(alpha)
        qw = q_window(alpha) if alpha - 2.0 / 3.0 > MARGIN and 1.0 - alpha >= -MARGIN else None
        n_pass = n_total = 0
        mismatches = []
        s0w_mid = None
        if qw is not None:
            plo = p_lower(alpha)
            ps = [plo * (1.0 + (k + 1) / p_samples) for k in range(p_samples)]
            s0w_mid = s0_window(alpha, 0.5 * (qw[0] + qw[1]))
            for q in _midpoints(*qw, q_steps):
                sw = s0_window(alpha, q)
                if sw is None:
                    continue
                for s0 in _midpoints(*sw, s0_steps):
                    for p in ps:
                        t = check_wellposedness(alpha, p, q, s0, epsilon, C_mu)
                        n_total += 1
                        mismatches += confirm_exact(t, C_mu)
                        if t.passed:
                            n_pass += 1
                            passing.append(t)
        summaries.append({
            "alpha": alpha,
            "q_window": list(qw) if qw else None,
            "s0_window_mid_q": list(s0w_mid) if s0w_mid else None,
            "p_lower": p_lower(alpha),
            "n_checked": n_total,
            "n_passing": n_pass,
            "empty": n_pass == 0,
            "binding": binding_constraint(alpha) if n_pass == 0 else None,
            "exact_mismatches": sorted(set(mismatches)),
        })
    return passing, summaries


def alpha_scan(lo=2.0 / 3.0, hi=1.0, step=0.05):
    """alpha = hi, hi - step, ... while alpha > lo (rounded to 12 digits)."""
    out = []
    k = 0
    while True:
        a = round(hi - k * step, 12)
        if a - lo <= MARGIN:
            break
        out.append(a)
        k += 1
    return out[::-1]


def discrepancy_values(alpha):
    """Numeric values of the two bounds that differ between the sets."""
    return {
        "alpha": alpha,
        "q_upper_wellposedness": _q_upper_wp(alpha),
        "q_upper_decay_d2": _q_upper_d2(alpha),
        "s0_lower_wellposedness": 3.0 - 2.0 * alpha,
        "s0_lower_decay_d2": alpha,
    }


def scan_report(alphas, q_steps=8, s0_steps=8, p_samples=3, epsilon=0.0, C_mu=1.0):
    """JSON-able report of an alpha scan including the set discrepancies."""
    _, summaries = enumerate_region(alphas, q_steps, s0_steps, p_samples, epsilon, C_mu)
    return {
        "summaries": summaries,
        "discrepancies": list(DISCREPANCIES),
        "discrepancy_values": [discrepancy_values(a) for a in alphas],
        "all_exact_confirmed": all(not s["exact_mismatches"] for s in summaries),
    }


def decay_exponent(alpha, s0):
    """Exponent s0/alpha in |theta(t)|_{L^2} <= C E0 <t>^(-s0/alpha)."""
    return s0 / alpha


def heat_decay_exponent(a, alpha, d=2):
    """|theta(t)|_{L^2} ~ t^(-(2a + d)/(2 alpha)) for data with |theta0^(k)| ~ |k|^a near 0."""
    return (2.0 * a + d) / (2.0 * alpha)


def intersection_s0_lower(alpha):
    """Default lower s0 bound for experiments: max(3 - 2 alpha, alpha)."""
    return max(3.0 - 2.0 * alpha, alpha)
