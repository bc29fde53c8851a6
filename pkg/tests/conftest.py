import numpy as np
import pytest

from pcisearch.moments import MomentEstimates


def random_moments(rng, p, ridge=0.3, n=100):
    """Moments of a random PD joint covariance of (Y0, Y1, S); the generating rho is returned too."""
    A = rng.normal(size=(p + 2, p + 2))
    M = A @ A.T + ridge * np.eye(p + 2)
    mu = rng.normal(size=p + 2)
    rho = M[0, 1] / np.sqrt(M[0, 0] * M[1, 1])
    m = MomentEstimates(mu[0], mu[1], M[0, 0], M[1, 1], mu[2:], M[2:, 2:], M[0, 2:], M[1, 2:],
                        n, n, tuple(f"s{j}" for j in range(p)))
    return m, float(rho)


def deterministic_world(sigma2=1.0):
    """Y0 = S and Y1 = 2 S with Var(S) = sigma2."""
    return MomentEstimates(0.0, 0.0, sigma2, 4 * sigma2, [0.0], [[sigma2]], [sigma2], [2 * sigma2],
                           50, 50, ("s",))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def write_trial_csv(path, rows, header=("id", "arm", "time", "event", "x1", "x2")):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for r in rows:
            fh.write(",".join(str(v) for v in r) + "\n")
    return path
