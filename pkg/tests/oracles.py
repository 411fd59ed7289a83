"""Independent reference computations used to freeze expected test values.

Arithmetic here runs on flat {(qexp, zexp): Fraction} dicts with explicit
loops. Nothing imports the package under test, so these results are an
independent check on it, not a restatement of it.
"""

from fractions import Fraction

# Term-list arithmetic. Keys are (qexp, zexp) with qexp in scaled units.


def tl_zero():
    return {}


def tl_one():
    return {(0, 0): Fraction(1)}


def tl_mono(c, zexp=0, qexp=0):
    c = Fraction(c)
    return {(qexp, zexp): c} if c else {}


def tl_add(a, b):
    out = dict(a)
    for k, c in b.items():
        s = out.get(k, Fraction(0)) + c
        if s:
            out[k] = s
        else:
            out.pop(k, None)
    return out


def tl_scale(a, c):
    c = Fraction(c)
    return {k: v * c for k, v in a.items()} if c else {}


def tl_mul(a, b, order):
    out = {}
    for (qa, za), ca in a.items():
        for (qb, zb), cb in b.items():
            qe = qa + qb
            if qe > order:
                continue
            k = (qe, za + zb)
            s = out.get(k, Fraction(0)) + ca * cb
            if s:
                out[k] = s
            else:
                out.pop(k, None)
    return out


def tl_poch(base, step, length, order):
    """Finite product prod_{t<length} (1 - base * q^(t*step))."""
    c, ze, qe = base
    out = tl_one()
    for t in range(length):
        f = tl_add(tl_one(), tl_mono(-Fraction(c), ze, qe + t * step))
        out = tl_mul(out, f, order)
    return out


def tl_poch_inf(base, step, order):
    """Infinite product, factors kept while their q-exponent stays <= order."""
    c, ze, qe = base
    out = tl_one()
    t = 0
    while qe + t * step <= order:
        f = tl_add(tl_one(), tl_mono(-Fraction(c), ze, qe + t * step))
        out = tl_mul(out, f, order)
        t += 1
    return out


def tl_inv(a, order):
    """Invert a series whose lowest q-slice is a single monomial."""
    m = min(qe for qe, _ in a)
    lead = [(k, c) for k, c in a.items() if k[0] == m]
    assert len(lead) == 1, "leading slice must be a monomial"
    (mq, mz), mc = lead[0]
    lead_inv = tl_mono(1 / mc, -mz, -mq)
    u = tl_add(tl_mul(lead_inv, a, order + abs(mq) + 1), tl_scale(tl_one(), -1))
    u = {k: c for k, c in u.items() if k[0] <= order}
    out = tl_one()
    term = tl_one()
    for _ in range(order + 1):
        term = tl_scale(tl_mul(term, u, order), -1)
        if not term:
            break
        out = tl_add(out, term)
    return tl_mul(out, lead_inv, order + abs(mq))


def tl_cmp_upto(a, b, order):
    keys = {k for k in a if k[0] <= order} | {k for k in b if k[0] <= order}
    bad = []
    for k in sorted(keys):
        ca = a.get(k, Fraction(0))
        cb = b.get(k, Fraction(0))
        if ca != cb:
            bad.append((k, ca, cb))
    return bad


def partition_counts(nmax):
    """p(0..nmax) by Euler's pentagonal recurrence."""
    p = [1] + [0] * nmax
    for n in range(1, nmax + 1):
        total = 0
        k = 1
        while True:
            g1 = k * (3 * k - 1) // 2
            g2 = k * (3 * k + 1) // 2
            if g1 > n and g2 > n:
                break
            sign = -1 if k % 2 == 0 else 1
            if g1 <= n:
                total += sign * p[n - g1]
            if g2 <= n:
                total += sign * p[n - g2]
            k += 1
        p[n] = total
    return p


def euler_product_coeffs(nmax):
    """Coefficients of prod (1-q^n) by the pentagonal number theorem."""
    out = [0] * (nmax + 1)
    out[0] = 1
    k = 1
    while k * (3 * k - 1) // 2 <= nmax:
        for g in (k * (3 * k - 1) // 2, k * (3 * k + 1) // 2):
            if g <= nmax:
                out[g] += -1 if k % 2 else 1
        k += 1
    return out


def gaussian_binom_poly(n, k):
    """Gaussian binomial as a dense integer coefficient list."""
    if k < 0 or k > n:
        return [0]
    table = {(0, 0): [1]}
    for nn in range(1, n + 1):
        for kk in range(0, min(k, nn) + 1):
            if kk == 0 or kk == nn:
                table[(nn, kk)] = [1]
                continue
            a = table[(nn - 1, kk - 1)]
            b = table[(nn - 1, kk)]
            size = max(len(a), len(b) + kk)
            out = [0] * size
            for i, c in enumerate(a):
                out[i] += c
            for i, c in enumerate(b):
                out[i + kk] += c
            table[(nn, kk)] = out
    return table[(n, k)]


def key_alpha(n):
    """Main bilateral pair alpha: (-1)^n z^n q^(n(n-1)/2) as a term dict."""
    return tl_mono((-1) ** (n % 2), n, n * (n - 1) // 2)


def key_beta(n, order):
    """Main bilateral pair beta: (z, q/z; q)_n / (q; q)_2n."""
    if n < 0:
        return {}
    num = tl_mul(
        tl_poch((1, 1, 0), 1, n, order),
        tl_poch((1, -1, 1), 1, n, order),
        order,
    )
    return tl_mul(num, tl_inv(tl_poch((1, 0, 1), 1, 2 * n, order), order), order)


def weak_v1_sides(order):
    """Square-weight single-sum identity, both sides by direct summation."""
    lhs = {}
    n = 0
    while n * n <= order:
        lhs = tl_add(lhs, tl_mul(tl_mono(1, 0, n * n), key_beta(n, order), order))
        n += 1
    asum = {}
    n = 0
    while n * n + n * (n - 1) // 2 <= order or n <= 1:
        for m in ([n] if n == 0 else [n, -n]):
            t = tl_mul(tl_mono(1, 0, m * m), key_alpha(m), order)
            if all(qe > order for qe, _ in t) and t:
                continue
            asum = tl_add(asum, t)
        n += 1
    rhs = tl_mul(tl_inv(tl_poch_inf((1, 0, 1), 1, order), order), asum, order)
    return lhs, rhs


def hecke_full_rhs(order):
    """Double sum q^(n(n+1)) * sum_{|j|<=n} (-1)^j z^j q^(-j)."""
    out = {}
    n = 0
    while n * (n + 1) - n <= order:
        for j in range(-n, n + 1):
            qe = n * (n + 1) - j
            if qe <= order:
                out = tl_add(out, tl_mono((-1) ** (j % 2), j, qe))
        n += 1
    return out


def fmt(tl):
    """Render a term dict as sorted python-literal text for freezing."""
    items = sorted(tl.items())
    return "{" + ", ".join(f"({q}, {z}): F({c})" for (q, z), c in items) + "}"
