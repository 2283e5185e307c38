"""Parameter container for the mixture of generalized hyperbolic factor
analyzers, plus its self-describing JSON document format."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

__all__ = ["MghfaModel", "model_to_dict", "model_from_dict", "save_model", "load_model"]

FORMAT_VERSION = 1


@dataclass
class MghfaModel:
    """Mixture parameters for G components in p dimensions with q factors.

    Attributes
    ----------
    pi : (G,) mixing proportions, positive, summing to one.
    lam : (G,) index parameters.
    omega : (G,) positive concentration parameters.
    mu : (G, p) component locations.
    beta : (G, p) component skewness vectors.
    loadings : (G, p, q) factor loading matrices.
    psi : (G, p) positive diagonals of the error covariance matrices.
    """

    pi: np.ndarray
    lam: np.ndarray
    omega: np.ndarray
    mu: np.ndarray
    beta: np.ndarray
    loadings: np.ndarray
    psi: np.ndarray

    def __post_init__(self):
        self.pi = np.asarray(self.pi, dtype=float)
        self.lam = np.asarray(self.lam, dtype=float)
        self.omega = np.asarray(self.omega, dtype=float)
        self.mu = np.asarray(self.mu, dtype=float)
        self.beta = np.asarray(self.beta, dtype=float)
        self.loadings = np.asarray(self.loadings, dtype=float)
        self.psi = np.asarray(self.psi, dtype=float)

    @property
    def G(self) -> int:
        return self.pi.shape[0]

    @property
    def p(self) -> int:
        return self.mu.shape[1]

    @property
    def q(self) -> int:
        return self.loadings.shape[2]

    def validate(self) -> "MghfaModel":
        G, p, q = self.G, self.p, self.q
        shapes = {
            "pi": (self.pi.shape, (G,)),
            "lam": (self.lam.shape, (G,)),
            "omega": (self.omega.shape, (G,)),
            "mu": (self.mu.shape, (G, p)),
            "beta": (self.beta.shape, (G, p)),
            "loadings": (self.loadings.shape, (G, p, q)),
            "psi": (self.psi.shape, (G, p)),
        }
        for name, (got, want) in shapes.items():
            if got != want:
                raise ValueError(f"{name} has shape {got}, expected {want}")
        if np.any(self.pi <= 0.0) or abs(self.pi.sum() - 1.0) > 1e-12:
            raise ValueError("mixing proportions must be positive and sum to one")
        if np.any(self.omega <= 0.0):
            raise ValueError("omega must be positive")
        if np.any(self.psi <= 0.0):
            raise ValueError("psi diagonals must be positive")
        for arr in (self.lam, self.mu, self.beta, self.loadings):
            if not np.all(np.isfinite(arr)):
                raise ValueError("model parameters must be finite")
        return self

    def sigma(self, g: int) -> np.ndarray:
        """Implied dispersion matrix loadings @ loadings' + diag(psi) of one component."""
        lam_g = self.loadings[g]
        return lam_g @ lam_g.T + np.diag(self.psi[g])

    def copy(self) -> "MghfaModel":
        return MghfaModel(
            self.pi.copy(),
            self.lam.copy(),
            self.omega.copy(),
            self.mu.copy(),
            self.beta.copy(),
            self.loadings.copy(),
            self.psi.copy(),
        )

    def permute(self, order) -> "MghfaModel":
        """Model with components reindexed by `order`."""
        idx = np.asarray(order, dtype=int)
        return MghfaModel(
            self.pi[idx],
            self.lam[idx],
            self.omega[idx],
            self.mu[idx],
            self.beta[idx],
            self.loadings[idx],
            self.psi[idx],
        )


def model_to_dict(m: MghfaModel) -> dict:
    """JSON-compatible document; floats round-trip at full precision."""
    return {
        "format_version": FORMAT_VERSION,
        "G": m.G,
        "p": m.p,
        "q": m.q,
        "pi": m.pi.tolist(),
        "lambda": m.lam.tolist(),
        "omega": m.omega.tolist(),
        "mu": m.mu.tolist(),
        "beta": m.beta.tolist(),
        "loadings": m.loadings.tolist(),
        "psi": m.psi.tolist(),
    }


def model_from_dict(doc: dict) -> MghfaModel:
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported model document version {version!r}")
    m = MghfaModel(
        pi=np.asarray(doc["pi"], dtype=float),
        lam=np.asarray(doc["lambda"], dtype=float),
        omega=np.asarray(doc["omega"], dtype=float),
        mu=np.asarray(doc["mu"], dtype=float),
        beta=np.asarray(doc["beta"], dtype=float),
        loadings=np.asarray(doc["loadings"], dtype=float),
        psi=np.asarray(doc["psi"], dtype=float),
    )
    expect = {"G": m.G, "p": m.p, "q": m.q}
    for key, val in expect.items():
        if doc.get(key) != val:
            raise ValueError(f"model document field {key}={doc.get(key)!r} does not match arrays ({val})")
    return m.validate()


def save_model(m: MghfaModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(m), fh, indent=1)
        fh.write("\n")


def load_model(path) -> MghfaModel:
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
