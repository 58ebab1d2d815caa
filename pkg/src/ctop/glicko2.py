"""Glicko-2 rating updates (one rating period at a time)."""

from __future__ import annotations

import math
from dataclasses import dataclass

SCALE = 173.7178
BASE_RATING = 1500.0


@dataclass(frozen=True)
class Glicko2State:
    rating: float = 1500.0
    deviation: float = 350.0
    volatility: float = 0.06

    def __post_init__(self):
        if not (self.deviation > 0 and self.volatility > 0):
            raise ValueError("deviation and volatility must be positive")

    def interval(self, width: float = 2.0) -> tuple[float, float]:
        return (self.rating - width * self.deviation, self.rating + width * self.deviation)


def _g(phi: float) -> float:
    return 1.0 / math.sqrt(1.0 + 3.0 * phi * phi / (math.pi * math.pi))


def _expected(mu: float, mu_j: float, g_j: float) -> float:
    return 1.0 / (1.0 + math.exp(-g_j * (mu - mu_j)))


def update(player: Glicko2State, results, tau: float = 0.5, tol: float = 1e-6) -> Glicko2State:
    """New state after a rating period.

    ``results`` holds ``(opponent_rating, opponent_deviation, score)`` tuples,
    score in [0, 1]. With no games only the deviation grows.
    """
    mu = (player.rating - BASE_RATING) / SCALE
    phi = player.deviation / SCALE
    sigma = player.volatility
    if not results:
        phi_star = math.sqrt(phi * phi + sigma * sigma)
        return Glicko2State(player.rating, phi_star * SCALE, sigma)

    v_inv = 0.0
    acc = 0.0
    for r_j, rd_j, s in results:
        mu_j = (r_j - BASE_RATING) / SCALE
        g_j = _g(rd_j / SCALE)
        e = _expected(mu, mu_j, g_j)
        v_inv += g_j * g_j * e * (1.0 - e)
        acc += g_j * (s - e)
    v = 1.0 / v_inv
    delta = v * acc

    # volatility: Illinois-style regula falsi on f(x) = 0
    a = math.log(sigma * sigma)
    phi2 = phi * phi

    def f(x):
        ex = math.exp(x)
        return ex * (delta * delta - phi2 - v - ex) / (2.0 * (phi2 + v + ex) ** 2) - (x - a) / (tau * tau)

    A = a
    if delta * delta > phi2 + v:
        B = math.log(delta * delta - phi2 - v)
    else:
        k = 1
        while f(a - k * tau) < 0:
            k += 1
        B = a - k * tau
    fA, fB = f(A), f(B)
    while abs(B - A) > tol:
        C = A + (A - B) * fA / (fB - fA)
        fC = f(C)
        if fC * fB <= 0:
            A, fA = B, fB
        else:
            fA /= 2.0
        B, fB = C, fC
    new_sigma = math.exp(A / 2.0)

    phi_star = math.sqrt(phi2 + new_sigma * new_sigma)
    new_phi = 1.0 / math.sqrt(1.0 / (phi_star * phi_star) + 1.0 / v)
    new_mu = mu + new_phi * new_phi * acc
    return Glicko2State(new_mu * SCALE + BASE_RATING, new_phi * SCALE, new_sigma)
