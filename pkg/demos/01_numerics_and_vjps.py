"""Numeric kernels and their hand-derived reverse-mode rules.

Walks the two vector-Jacobian products the adaptation step is built from
(entropy-of-softmax and L2 normalization) and checks each against central
finite differences on the spot.
"""

import numpy as np

from d2tpt import (
    entropy,
    l2_normalize,
    softmax,
    vjp_l2_normalize,
    vjp_softmax_entropy,
)


def fd_grad(f, x, h=1e-6):
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def main():
    rng = np.random.default_rng(0)

    print("== softmax and entropy ==")
    logits = np.array([2.0, 0.5, -1.0, 0.0])
    p = softmax(logits)
    print(f"logits   {logits}")
    print(f"softmax  {np.round(p, 4)}  (sums to {p.sum():.12f})")
    print(f"entropy  {entropy(p):.6f} nats (uniform over 4 would be {np.log(4):.6f})")

    print("\n== d/dlogits H(softmax(logits)) ==")
    x = rng.standard_normal(6)
    analytic = vjp_softmax_entropy(x, 1.0)
    numeric = fd_grad(lambda v: entropy(softmax(v)), x)
    rel = np.linalg.norm(analytic - numeric) / np.linalg.norm(numeric)
    print(f"analytic {np.round(analytic, 6)}")
    print(f"numeric  {np.round(numeric, 6)}")
    print(f"relative error {rel:.3e}")
    uniform_grad = vjp_softmax_entropy(np.zeros(5), 1.0)
    print(f"at uniform logits the gradient vanishes: max |g| = "
          f"{np.max(np.abs(uniform_grad)):.3e}")

    print("\n== VJP of v -> v/||v|| ==")
    v = 3.0 * rng.standard_normal(6)
    g_out = rng.standard_normal(6)
    analytic = vjp_l2_normalize(v, g_out)
    numeric = fd_grad(lambda u: float(g_out @ l2_normalize(u)), v)
    rel = np.linalg.norm(analytic - numeric) / np.linalg.norm(numeric)
    print(f"relative error {rel:.3e}")
    vhat = l2_normalize(v)
    print(f"pullback is tangent to the sphere: <vjp, vhat> = "
          f"{abs(float(analytic @ vhat)):.3e}")


if __name__ == "__main__":
    main()
