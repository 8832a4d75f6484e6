"""Regenerate the reference configs in ../configs.

Mass-tensor values are unit scale (alpha = 1, 0.5), fields have entries of
size about 0.5, and gyroscope momenta have distinct dyadic coefficients in
[1, 2] on a basis of h (powers of chi for the totally symmetric top).
"""

import json
from pathlib import Path

import numpy as np

from gyrotop import models as M

OUT = Path(__file__).resolve().parent.parent / "configs"
A1, A2, CHI = 1.0, 0.5, 0.5


def triples(a):
    n = a.shape[0]
    return [[i + 1, j + 1, float(a[i, j])] for i in range(n) for j in range(i + 1, n) if a[i, j] != 0]


def regular_chi(n, rng):
    """Dense skew matrix with dyadic entries in [-1/2, 1/2] and distinct eigenvalue moduli."""
    while True:
        upper = np.triu(rng.integers(-32, 33, (n, n)) / 64.0, 1)
        chi = upper - upper.T
        mods = np.sort(np.abs(np.linalg.eigvals(chi).imag))[::-1][: 2 * (n // 2) : 2]
        if np.all(np.diff(mods) < -0.05) and mods[-1] > 0.05:
            return chi


def write(name, cfg):
    (OUT / f"{name}.json").write_text(json.dumps(cfg, indent=2) + "\n", encoding="utf-8")


def main():
    rng = np.random.default_rng(20240611)
    common = {"integrator": "rk4", "dt": 1e-3, "T": 10.0, "seed": 1}
    for n in (3, 4, 5, 6):
        spec = M.lagrange_top(n, A1, A2, CHI)
        L = M.generic_gyro(spec, rng)
        write(f"lagrange_n{n}", {"description": f"Lagrange top on so(n) x so(n), n={n}", "family": "lagrange_so_so",
                                 "n": n, "alpha": [A1, A2], "chi": [[1, 2, CHI]], "L": triples(L), **common})
    spec = M.lagrange_bitop(A1, A2, CHI, 0.3)
    write("bitop_n4", {"description": "Lagrange bitop, n=4", "family": "bitop", "n": 4, "alpha": [A1, A2],
                       "chi": [[1, 2, CHI], [3, 4, 0.3]], "L": triples(M.generic_gyro(spec, rng)), **common})
    for n in (3, 4, 5, 6):
        chi = regular_chi(n, rng)
        spec = M.totally_symmetric(n, A1, chi)
        write(f"totsym_n{n}", {"description": f"totally symmetric top with regular chi, n={n}",
                               "family": "totally_symmetric", "n": n, "alpha": [A1], "chi": triples(chi),
                               "L": triples(M.generic_gyro(spec, rng)), **common})
    for n in (3, 4, 5, 6):
        spec = M.belyaev_top(n, A1, A2, CHI)
        write(f"belyaev_n{n}", {"description": f"Belyaev top on e(n), n={n}", "family": "belyaev_e_n", "n": n,
                                "alpha": [A1, A2], "chi": [0.0] * (n - 1) + [CHI],
                                "L": triples(M.generic_gyro(spec, rng)), **common})
    for J in ([A1, A1, A2, A2], [A1, A1, A2, A2, 0.75, 0.75]):
        spec = M.manakov_gyro(J)
        n = len(J)
        write(f"manakov_n{n}", {"description": f"Manakov top with gyroscope, pattern {'x'.join(['2'] * (n // 2))}",
                                "family": "manakov_gyro", "n": n, "J": J,
                                "L": triples(M.generic_gyro(spec, rng)), **common})
    c = M.dyadic_coefficients(rng, 3)
    write("classical_euler", {"description": "Euler gyrostat (free, n=3)", "family": "classical3_euler", "n": 3,
                              "I": [1.0, 2.0, 3.0], "L": c.tolist(), "m_transformed": 1.0, **common})
    write("classical_lagrange", {"description": "classical Lagrange top with gyroscope", "family": "classical3_lagrange",
                                 "n": 3, "I": [1.0, 1.0, 0.5], "chi": [0.0, 0.0, CHI],
                                 "L": [0.0, 0.0, float(M.dyadic_coefficients(rng, 1)[0])], **common})
    write("classical_kowalevski", {"description": "Kowalevski top with gyroscope", "family": "classical3_kowalevski",
                                   "n": 3, "I": [1.0, 1.0, 0.5], "chi": [CHI, 0.0, 0.0],
                                   "L": [0.0, 0.0, float(M.dyadic_coefficients(rng, 1)[0])], **common})


if __name__ == "__main__":
    main()
