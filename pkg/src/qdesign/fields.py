"""Finite field arithmetic for the tower F_q < L < K and linear injections of K.

Elements of a prime-power field GF(p^k) are plain ints in ``range(p**k)``.
The base-p digits of the code are the coefficients of a polynomial in ``x``
(digit i is the coefficient of x^i) reduced modulo a fixed primitive
polynomial, so ``x`` (code ``p``) is always a primitive element.
Multiplication goes through exp/log tables and addition is XOR for p = 2 or a
Zech-logarithm lookup for odd p.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

from .errors import BudgetExceeded, FieldError

#: Largest field order accepted by ``GF`` and ``build_tower``.
FIELD_BUDGET = 1 << 20

#: Full-rank rejection sampling retry cap.
INJECTION_RETRIES = 64


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    i = 2
    while i * i <= n:
        if n % i == 0:
            return False
        i += 1
    return True


def prime_factors(n: int) -> list[int]:
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def prime_power(q: int) -> tuple[int, int]:
    """Return (p, e) with q = p^e, or raise FieldError."""
    if q < 2:
        raise FieldError(f"{q} is not a prime power")
    for p in range(2, q + 1):
        if q % p == 0:
            e = 0
            t = q
            while t % p == 0:
                t //= p
                e += 1
            if t != 1 or not is_prime(p):
                raise FieldError(f"{q} is not a prime power")
            return p, e
    raise FieldError(f"{q} is not a prime power")  # pragma: no cover


# -- polynomial helpers over F_p (coefficient lists, lowest degree first) ----

def _poly_mulmod(a, b, mod, p):
    k = len(mod) - 1
    res = [0] * (2 * k)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                if bj:
                    res[i + j] = (res[i + j] + ai * bj) % p
    for d in range(len(res) - 1, k - 1, -1):
        c = res[d]
        if c:
            for j in range(k + 1):
                res[d - k + j] = (res[d - k + j] - c * mod[j]) % p
    return res[:k]


def _poly_powmod_x(e, mod, p):
    k = len(mod) - 1
    result = [1] + [0] * (k - 1)
    base = ([0, 1] + [0] * k)[:k] if k > 1 else [(-mod[0]) % p]
    while e:
        if e & 1:
            result = _poly_mulmod(result, base, mod, p)
        base = _poly_mulmod(base, base, mod, p)
        e >>= 1
    return result


def _is_primitive(mod, p) -> bool:
    k = len(mod) - 1
    if mod[0] == 0:
        return False
    order = p ** k - 1
    one = [1] + [0] * (k - 1)
    if _poly_powmod_x(order, mod, p) != one:
        return False
    return all(_poly_powmod_x(order // r, mod, p) != one for r in prime_factors(order))


@lru_cache(maxsize=None)
def primitive_polynomial(p: int, k: int) -> tuple[int, ...]:
    """Lexicographically smallest monic primitive polynomial of degree k over F_p.

    Coefficients are returned lowest degree first, leading 1 included.
    Candidates are ordered by their lower coefficients read as a base-p
    number with the constant term least significant.
    """
    for code in range(1, p ** k):
        lower = [(code // p ** i) % p for i in range(k)]
        mod = lower + [1]
        if _is_primitive(mod, p):
            return tuple(mod)
    raise FieldError(f"no primitive polynomial of degree {k} over F_{p}")  # pragma: no cover


class GF:
    """The field GF(p^k) with int-coded elements."""

    def __init__(self, p: int, k: int = 1):
        if not is_prime(p):
            raise FieldError(f"characteristic {p} is not prime")
        if k < 1:
            raise FieldError("extension degree must be positive")
        order = p ** k
        if order > FIELD_BUDGET:
            raise BudgetExceeded(f"field order {p}^{k} exceeds the budget {FIELD_BUDGET}")
        self.p, self.k, self.order = p, k, order
        self.modulus = primitive_polynomial(p, k)
        n1 = order - 1
        exp = [0] * (2 * n1)
        log = [0] * order
        # multiply by x: shift digits up one place and reduce with the modulus
        top = p ** (k - 1)
        red = [(-c) % p for c in self.modulus[:k]]
        red_code = sum(c * p ** i for i, c in enumerate(red))
        a = 1
        for i in range(n1):
            exp[i] = a
            log[a] = i
            if p == 2:
                a <<= 1
                if a & order:
                    a ^= order | red_code
            else:
                lead = a // top
                a = (a % top) * p
                if lead:
                    a = self._digit_add(a, self._digit_scale(red_code, lead))
        for i in range(n1, 2 * n1):
            exp[i] = exp[i - n1]
        self.exp, self.log = exp, log
        self.zech: Optional[list[int]] = None
        if p != 2:
            # zech[j] = log(1 + x^j), or -1 when 1 + x^j = 0
            zech = [0] * n1
            for j in range(n1):
                s = self._digit_add(1, exp[j])
                zech[j] = log[s] if s else -1
            self.zech = zech

    # slow digit-wise helpers used while building tables
    def _digit_add(self, a: int, b: int) -> int:
        p = self.p
        res, mul = 0, 1
        while a or b:
            res += ((a % p + b % p) % p) * mul
            a //= p
            b //= p
            mul *= p
        return res

    def _digit_scale(self, a: int, c: int) -> int:
        p = self.p
        res, mul = 0, 1
        while a:
            res += ((a % p) * c % p) * mul
            a //= p
            mul *= p
        return res

    def __repr__(self):
        return f"GF({self.p}^{self.k})"

    def __eq__(self, other):
        return isinstance(other, GF) and (self.p, self.k) == (other.p, other.k)

    def __hash__(self):
        return hash(("GF", self.p, self.k))

    @property
    def q(self) -> int:
        return self.order

    @property
    def primitive(self) -> int:
        return self.exp[0 if self.order == 2 else 1]

    def elements(self) -> range:
        return range(self.order)

    def add(self, a: int, b: int) -> int:
        if self.p == 2:
            return a ^ b
        if a == 0:
            return b
        if b == 0:
            return a
        la, lb = self.log[a], self.log[b]
        z = self.zech[(lb - la) % (self.order - 1)]
        if z < 0:
            return 0
        return self.exp[la + z]

    def neg(self, a: int) -> int:
        if self.p == 2 or a == 0:
            return a
        # -1 = x^((Q-1)/2) for odd characteristic
        return self.exp[self.log[a] + (self.order - 1) // 2]

    def sub(self, a: int, b: int) -> int:
        return self.add(a, self.neg(b))

    def mul(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        return self.exp[self.log[a] + self.log[b]]

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("inverse of zero")
        return self.exp[(self.order - 1 - self.log[a]) % (self.order - 1)]

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))

    def pow(self, a: int, e: int) -> int:
        if a == 0:
            if e < 0:
                raise ZeroDivisionError("negative power of zero")
            return 1 if e == 0 else 0
        return self.exp[(self.log[a] * e) % (self.order - 1)]

    def power_of_primitive(self, e: int) -> int:
        return self.exp[e % (self.order - 1)]

    def multiplicative_order(self, a: int) -> int:
        if a == 0:
            raise FieldError("zero has no multiplicative order")
        n1 = self.order - 1
        from math import gcd
        return n1 // gcd(n1, self.log[a])

    def eval_poly(self, coeffs: Sequence[int], x: int) -> int:
        """Evaluate sum coeffs[i] x^i (coefficients already field codes)."""
        acc = 0
        for c in reversed(coeffs):
            acc = self.add(self.mul(acc, x), c)
        return acc


@lru_cache(maxsize=None)
def gf(q: int) -> GF:
    """Cached GF(q) for a prime power q."""
    p, e = prime_power(q)
    return GF(p, e)


@lru_cache(maxsize=None)
def _gf_pk(p: int, k: int) -> GF:
    return GF(p, k)


def find_embedding(small: GF, big: GF) -> list[int]:
    """Table of a ring embedding small -> big (index = small code)."""
    if small.p != big.p or big.k % small.k:
        raise FieldError(f"{small} does not embed in {big}")
    if small.order == 2:
        return [0, 1]
    c = (big.order - 1) // (small.order - 1)
    n_small = small.order - 1
    # the prime-field constants sit inside every field as the multiples of 1
    prime_map = [0] * small.p
    for d in range(1, small.p):
        prime_map[d] = big.add(prime_map[d - 1], 1)
    coeffs = [prime_map[a] for a in small.modulus]
    from math import gcd
    for t in range(1, n_small + 1):
        if gcd(t, n_small) != 1:
            continue
        beta = big.power_of_primitive(t * c)
        if big.eval_poly(coeffs, beta) == 0:
            table = [0] * small.order
            lb = big.log[beta]
            for j in range(n_small):
                table[small.exp[j]] = big.exp[(lb * j) % (big.order - 1)]
            return table
    raise FieldError("no root of the subfield modulus found")  # pragma: no cover


LEVELS = ("F", "L", "K")


class FieldTower:
    """F_q < L = F_{q^ell} < K = F_{q^{ell m}} with alpha primitive in K."""

    def __init__(self, p: int, e: int, ell: int, m: int):
        if not is_prime(p):
            raise FieldError(f"characteristic {p} is not prime")
        if min(e, ell, m) < 1:
            raise FieldError("e, ell and m must be positive")
        if p ** (e * ell * m) > FIELD_BUDGET:
            raise BudgetExceeded(
                f"|K| = {p}^{e * ell * m} exceeds the budget {FIELD_BUDGET}")
        self.p, self.e, self.ell, self.m = p, e, ell, m
        self.q = p ** e
        self.F = _gf_pk(p, e)
        self.L = _gf_pk(p, e * ell)
        self.K = _gf_pk(p, e * ell * m)
        self.alpha = self.K.primitive
        self.emb_FL = find_embedding(self.F, self.L)
        self.emb_LK = find_embedding(self.L, self.K)
        self.emb_FK = [self.emb_LK[self.emb_FL[a]] for a in range(self.q)]
        self.dim = ell * m  # dim of K over F_q
        self._coords: Optional[list[tuple[int, ...]]] = None
        self._from_coords: Optional[dict] = None
        self._L_in_K: Optional[frozenset] = None
        self._K_to_L: Optional[dict[int, int]] = None
        self._Lcoords: Optional[list] = None

    @classmethod
    def parse(cls, text: str) -> "FieldTower":
        """Parse a tower spec ``"p^e:ell:m"`` such as ``"2^1:2:2"``."""
        try:
            pe, ell, m = text.strip().split(":")
            if "^" in pe:
                p, e = pe.split("^")
            else:
                p, e = pe, "1"
            return build_tower(int(p), int(e), int(ell), int(m))
        except ValueError as exc:
            raise FieldError(f"bad tower spec {text!r}: {exc}") from None

    @property
    def spec(self) -> str:
        return f"{self.p}^{self.e}:{self.ell}:{self.m}"

    def __repr__(self):
        return f"FieldTower({self.spec})"

    def level(self, name: str) -> GF:
        return {"F": self.F, "L": self.L, "K": self.K}[name]

    # -- elements ---------------------------------------------------------
    def elem(self, value: int, level: str = "K") -> "FieldElem":
        f = self.level(level)
        if not 0 <= value < f.order:
            raise FieldError(f"{value} is not an element of level {level}")
        return FieldElem(self, level, value)

    def alpha_elem(self) -> "FieldElem":
        return FieldElem(self, "K", self.alpha)

    # -- F_q coordinates of K in the basis 1, alpha, ..., alpha^{lm-1} -----
    def _build_coords(self):
        K = self.K
        vals = [0]
        vecs: list[tuple[int, ...]] = [()]
        for j in range(self.dim):
            aj = K.power_of_primitive(j)
            nv, nvec = [], []
            for c in range(self.q):
                t = K.mul(self.emb_FK[c], aj)
                for x, v in zip(vals, vecs):
                    nv.append(K.add(x, t))
                    nvec.append(v + (c,))
            vals, vecs = nv, nvec
        coords: list = [None] * K.order
        for x, v in zip(vals, vecs):
            coords[x] = v
        self._coords = coords
        self._from_coords = {v: x for x, v in zip(vals, vecs)}

    def coords(self, x: int) -> tuple[int, ...]:
        """F_q-coordinates of the K-element x."""
        if self._coords is None:
            self._build_coords()
        return self._coords[x]

    def from_coords(self, v: Sequence[int]) -> int:
        if self._from_coords is None:
            self._build_coords()
        return self._from_coords[tuple(v)]

    # -- L inside K ----------------------------------------------------------
    def L_elements_in_K(self) -> frozenset:
        if self._L_in_K is None:
            self._L_in_K = frozenset(self.emb_LK)
            self._K_to_L = {y: x for x, y in enumerate(self.emb_LK)}
        return self._L_in_K

    def embed_L(self, x: int) -> int:
        return self.emb_LK[x]

    def restrict_to_L(self, y: int) -> Optional[int]:
        """L-code of a K-element lying in L, else None."""
        self.L_elements_in_K()
        return self._K_to_L.get(y)

    def L_coords(self, x: int) -> tuple[int, ...]:
        """Coordinates of the K-element x over L in the basis 1, alpha, ..., alpha^{m-1}.

        Entries are L-level codes.
        """
        if self._Lcoords is None:
            K = self.K
            vals = [0]
            vecs: list[tuple[int, ...]] = [()]
            for j in range(self.m):
                aj = K.power_of_primitive(j)
                nv, nvec = [], []
                for c in range(self.L.order):
                    t = K.mul(self.emb_LK[c], aj)
                    for y, v in zip(vals, vecs):
                        nv.append(K.add(y, t))
                        nvec.append(v + (c,))
                vals, vecs = nv, nvec
            table: list = [None] * K.order
            for y, v in zip(vals, vecs):
                table[y] = v
            self._Lcoords = table
        return self._Lcoords[x]

    def alpha_L(self) -> int:
        """Primitive element of L, as a K-code (alpha^{(|K|-1)/(|L|-1)})."""
        c = (self.K.order - 1) // (self.L.order - 1)
        return self.K.power_of_primitive(c)

    def in_F(self, y: int) -> bool:
        return y in self.emb_FK


def build_tower(p: int, e: int, ell: int, m: int) -> FieldTower:
    return _cached_tower(p, e, ell, m)


@lru_cache(maxsize=64)
def _cached_tower(p, e, ell, m):
    return FieldTower(p, e, ell, m)


@dataclass(frozen=True)
class FieldElem:
    """A field element tagged with its tower and level ("F", "L" or "K")."""

    tower: FieldTower = field(repr=False, compare=False)
    lvl: str
    value: int

    def __post_init__(self):
        if self.lvl not in LEVELS:
            raise FieldError(f"unknown level {self.lvl!r}")

    @property
    def field(self) -> GF:
        return self.tower.level(self.lvl)

    def _check(self, other: "FieldElem"):
        if not isinstance(other, FieldElem):
            raise TypeError("operand is not a FieldElem")
        if other.tower is not self.tower or other.lvl != self.lvl:
            raise FieldError(f"level mismatch: {self.lvl} vs {other.lvl}")

    def __add__(self, other):
        self._check(other)
        return FieldElem(self.tower, self.lvl, self.field.add(self.value, other.value))

    def __sub__(self, other):
        self._check(other)
        return FieldElem(self.tower, self.lvl, self.field.sub(self.value, other.value))

    def __neg__(self):
        return FieldElem(self.tower, self.lvl, self.field.neg(self.value))

    def __mul__(self, other):
        self._check(other)
        return FieldElem(self.tower, self.lvl, self.field.mul(self.value, other.value))

    def __truediv__(self, other):
        self._check(other)
        return FieldElem(self.tower, self.lvl, self.field.div(self.value, other.value))

    def __pow__(self, e: int):
        return FieldElem(self.tower, self.lvl, self.field.pow(self.value, e))

    def inv(self) -> "FieldElem":
        return FieldElem(self.tower, self.lvl, self.field.inv(self.value))

    def __bool__(self):
        return self.value != 0


def field_arith(a: FieldElem, b: Optional[FieldElem], op: str, exponent: int = 0) -> FieldElem:
    if op == "add":
        return a + b
    if op == "mul":
        return a * b
    if op == "inv":
        return a.inv()
    if op == "pow":
        return a ** exponent
    raise FieldError(f"unknown operation {op!r}")


def embed_subfield(x: FieldElem) -> FieldElem:
    """Image of an L-element (or F-element) in K."""
    t = x.tower
    if x.lvl == "L":
        return FieldElem(t, "K", t.emb_LK[x.value])
    if x.lvl == "F":
        return FieldElem(t, "K", t.emb_FK[x.value])
    raise FieldError("embed_subfield expects an element of L or F_q")


# -- injections -------------------------------------------------------------

class LinearInjection:
    """Injective F_q-linear map K -> F_q^n given by an n x (ell m) matrix W.

    Vectors of F_q^n are tuples of F_q codes.
    """

    def __init__(self, tower: FieldTower, W: Sequence[Sequence[int]]):
        from .linalg import rank
        self.tower = tower
        self.W = tuple(tuple(row) for row in W)
        self.n = len(self.W)
        if any(len(row) != tower.dim for row in self.W):
            raise FieldError("W must have ell*m columns")
        if rank(tower.F, [list(r) for r in self.W]) != tower.dim:
            raise FieldError("W is not of full column rank")
        self._image: Optional[list] = None
        self._inverse: Optional[dict] = None

    def __eq__(self, other):
        return isinstance(other, LinearInjection) and self.tower is other.tower and self.W == other.W

    def __hash__(self):
        return hash(self.W)

    def apply_coords(self, v: Sequence[int]) -> tuple[int, ...]:
        F = self.tower.F
        out = []
        for row in self.W:
            acc = 0
            for a, b in zip(row, v):
                if a and b:
                    acc = F.add(acc, F.mul(a, b))
            out.append(acc)
        return tuple(out)

    def __call__(self, x: int) -> tuple[int, ...]:
        if self._image is not None:
            return self._image[x]
        return self.apply_coords(self.tower.coords(x))

    def image_table(self) -> list:
        if self._image is None:
            self._image = [self.apply_coords(self.tower.coords(x)) for x in range(self.tower.K.order)]
        return self._image

    def inverse(self, v: Sequence[int]) -> Optional[int]:
        if self._inverse is None:
            self._inverse = {w: x for x, w in enumerate(self.image_table())}
        return self._inverse.get(tuple(v))

    def to_json(self) -> list:
        return [list(r) for r in self.W]


def sample_injection(tower: FieldTower, n: int, rng: random.Random) -> LinearInjection:
    """Uniform full-rank W by rejection sampling (deterministic given rng state)."""
    from .linalg import rank
    if n < tower.dim:
        raise FieldError(f"n = {n} < ell*m = {tower.dim}: no injection exists")
    q = tower.q
    for _ in range(INJECTION_RETRIES):
        W = [[rng.randrange(q) for _ in range(tower.dim)] for _ in range(n)]
        if rank(tower.F, W) == tower.dim:
            return LinearInjection(tower, W)
    raise FieldError("full-rank sampling retry cap reached")  # pragma: no cover


def inject(iota: LinearInjection, x: FieldElem | int) -> tuple[int, ...]:
    if isinstance(x, FieldElem):
        if x.lvl != "K":
            x = embed_subfield(x)
        x = x.value
    return iota(x)


def inject_inverse(iota: LinearInjection, v: Sequence[int]) -> Optional[FieldElem]:
    """Preimage of v in K, or None when v is not in the image."""
    x = iota.inverse(v)
    return None if x is None else FieldElem(iota.tower, "K", x)
