"""Dirichlet sine eigenbasis on intervals and boxes (1 to 3 axes).

The Laplacian eigenpairs on prod_ax [0, L_ax] with zero boundary data are
tensor products of sines,

    e_m(x) = prod_ax sqrt(2/L_ax) * sin(i_ax pi x_ax / L_ax),
    lambda_m = sum_ax (i_ax pi / L_ax)^2,

and this module builds the lowest ``N`` of them together with a uniform
collocation grid and the quadrature functionals the Galerkin solver needs.

Two integration rules coexist on the same grid, because no single weight
vector on uniform nodes is exact for constants, pair products and triple
products at once:

* ``integrate`` uses trapezoid weights on the closed grid.  Exact for
  constants (weights sum to the volume) and for products of two modes
  (discrete sine-transform orthogonality), so round trips and mass checks
  hold to round-off.
* ``integrate_sine`` uses interpolatory sine weights on the interior nodes.
  Exact for any function whose per-axis sine expansion is band-limited to
  M-1, in particular for products of up to three modes once
  M >= 3*max_index + 1.  The default M = 4*(max_index + 1) always satisfies
  this, which is what makes the pseudospectral nonlinear projection agree
  with the analytic Galerkin integrals for polynomial nonlinearities.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import reduce

import numpy as np

__all__ = ["DomainSpec", "Grid", "Basis", "build_basis"]


@dataclass(frozen=True)
class DomainSpec:
    """Axis-aligned box prod_ax [0, lengths[ax]] with 1 to 3 axes."""

    lengths: tuple[float, ...]

    def __post_init__(self):
        lengths = tuple(float(L) for L in self.lengths)
        if not 1 <= len(lengths) <= 3:
            raise ValueError(f"domain needs 1 to 3 axes, got {len(lengths)}")
        if any(not L > 0 or not math.isfinite(L) for L in lengths):
            raise ValueError("axis lengths must be positive and finite")
        object.__setattr__(self, "lengths", lengths)

    @classmethod
    def interval(cls, length: float = math.pi) -> "DomainSpec":
        return cls((length,))

    @classmethod
    def box(cls, *lengths: float) -> "DomainSpec":
        return cls(tuple(lengths))

    @property
    def ndim(self) -> int:
        return len(self.lengths)

    @property
    def volume(self) -> float:
        return float(np.prod(self.lengths))


@dataclass(frozen=True)
class Grid:
    """Uniform tensor grid with the two quadrature weight vectors.

    Nodes are closed per axis (j = 0..M_ax, x = j*L_ax/M_ax) so that values
    arrays carry the boundary explicitly; every basis function vanishes
    there.  Values arrays are flat, C-ordered over ``shape``.
    """

    axes: tuple[np.ndarray, ...]
    shape: tuple[int, ...]
    trap_weights: np.ndarray
    sine_weights: np.ndarray

    @property
    def ndim(self) -> int:
        return len(self.axes)

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.shape))

    def points(self) -> np.ndarray:
        """Node coordinates, shape (n_nodes, ndim), C-ordered."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)


def _axis_sine_weights(L: float, M: int) -> np.ndarray:
    # Interpolatory rule: expand the samples in sin(k pi x / L), k = 1..M-1,
    # and integrate the expansion exactly.  Collapsing the transform gives
    # one weight per node; even-k modes have zero integral and drop out.
    j = np.arange(1, M)
    k = np.arange(1, M)
    exact = L * (1 - (-1.0) ** k) / (k * np.pi)
    S = np.sin(np.outer(j, k) * (np.pi / M))
    w = np.zeros(M + 1)
    w[1:M] = (2.0 / M) * (S @ exact)
    return w


def _axis_trap_weights(L: float, M: int) -> np.ndarray:
    w = np.full(M + 1, L / M)
    w[0] = w[-1] = L / (2.0 * M)
    return w


def _tensor(vectors: list[np.ndarray]) -> np.ndarray:
    return reduce(np.multiply.outer, vectors).ravel()


def _select_modes(domain: DomainSpec, n_modes: int):
    """Lowest-eigenvalue mode index tuples, ties broken lexicographically."""
    nd = domain.ndim
    rates = [(math.pi / L) ** 2 for L in domain.lengths]
    # lambda of (N,1,..,1) on any single axis bounds the N-th smallest
    # eigenvalue, so candidates need (i_ax pi/L_ax)^2 <= that bound.
    lam_ub = min(
        rates[ax] * n_modes**2 + sum(rates[b] for b in range(nd) if b != ax)
        for ax in range(nd)
    )
    bounds = [max(1, int(math.floor(math.sqrt(lam_ub / r) + 1e-9))) for r in rates]
    candidates = []
    for idx in itertools.product(*(range(1, b + 1) for b in bounds)):
        lam = sum(r * i**2 for r, i in zip(rates, idx))
        candidates.append((lam, idx))
    candidates.sort(key=lambda c: (c[0], c[1]))
    if len(candidates) < n_modes:  # cannot happen by the bound construction
        raise RuntimeError("mode enumeration bound too small")
    chosen = candidates[:n_modes]
    eigenvalues = np.array([c[0] for c in chosen])
    indices = np.array([c[1] for c in chosen], dtype=np.int64)
    return eigenvalues, indices


class Basis:
    """The lowest ``n_modes`` Dirichlet eigenmodes with grid transforms.

    Attributes
    ----------
    eigenvalues : (N,) array, sorted ascending (ties lexicographic in the
        per-axis index tuples held in ``mode_indices``).
    kappa : float, integral of the first mode over the domain (positive).
    mode_matrix : (n_nodes, N) array of mode values on the grid.
    """

    def __init__(self, domain: DomainSpec, n_modes: int, M=None):
        if n_modes < 1:
            raise ValueError("need at least one mode")
        self.domain = domain
        self.n_modes = int(n_modes)
        self.eigenvalues, self.mode_indices = _select_modes(domain, self.n_modes)

        max_idx = self.mode_indices.max(axis=0)
        if M is None:
            M_axes = tuple(4 * (int(m) + 1) for m in max_idx)
        else:
            M_axes = tuple(M) if np.iterable(M) else (int(M),) * domain.ndim
            if len(M_axes) != domain.ndim:
                raise ValueError("M must give one node count per axis")
            for M_ax, m in zip(M_axes, max_idx):
                if M_ax < 2 * int(m) + 2:
                    raise ValueError(
                        f"M={M_ax} aliases modes up to index {int(m)}; "
                        f"need M >= {2 * int(m) + 2}"
                    )
        self.M = M_axes

        axes = []
        trap_axes, sine_axes = [], []
        for L, M_ax in zip(domain.lengths, M_axes):
            axes.append(np.linspace(0.0, L, M_ax + 1))
            trap_axes.append(_axis_trap_weights(L, M_ax))
            sine_axes.append(_axis_sine_weights(L, M_ax))
        self.grid = Grid(
            axes=tuple(axes),
            shape=tuple(M_ax + 1 for M_ax in M_axes),
            trap_weights=_tensor(trap_axes),
            sine_weights=_tensor(sine_axes),
        )

        # per-axis mode values; endpoints forced to exact zeros
        axis_modes = []
        for ax, (L, nodes) in enumerate(zip(domain.lengths, axes)):
            vals = np.sqrt(2.0 / L) * np.sin(
                np.outer(np.arange(1, max_idx[ax] + 1), nodes) * (np.pi / L)
            )
            vals[:, 0] = 0.0
            vals[:, -1] = 0.0
            axis_modes.append(vals)
        cols = []
        for idx in self.mode_indices:
            cols.append(_tensor([axis_modes[ax][i - 1] for ax, i in enumerate(idx)]))
        self.mode_matrix = np.column_stack(cols)

        self._proj = self.mode_matrix.T * self.grid.trap_weights
        self._proj_sine = self.mode_matrix.T * self.grid.sine_weights
        self.kappa = float(
            np.prod([2.0 * math.sqrt(2.0 * L) / math.pi for L in domain.lengths])
        )

    @property
    def lambda1(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def e1_values(self) -> np.ndarray:
        return self.mode_matrix[:, 0]

    def synthesize(self, coeffs: np.ndarray) -> np.ndarray:
        """Grid values of sum_m coeffs[m] e_m; batched over leading axes."""
        coeffs = np.asarray(coeffs, dtype=float)
        return coeffs @ self.mode_matrix.T

    def project(self, values: np.ndarray) -> np.ndarray:
        """L2 coefficients of grid samples (exact on span of the modes)."""
        return self._proj @ np.asarray(values, dtype=float)

    def project_sine(self, values: np.ndarray) -> np.ndarray:
        """Mode inner products under the sine rule.

        Exact for integrands that are per-axis sine polynomials below the
        grid band, e.g. (product of two modes) * e_m.  This is the rule the
        nonlinear Galerkin projection uses.
        """
        return self._proj_sine @ np.asarray(values, dtype=float)

    def integrate(self, values: np.ndarray) -> float:
        """Trapezoid integral; exact for constants and mode pair products."""
        return float(self.grid.trap_weights @ np.asarray(values, dtype=float))

    def integrate_sine(self, values: np.ndarray) -> float:
        """Sine-interpolatory integral; exact for <=3-mode products."""
        return float(self.grid.sine_weights @ np.asarray(values, dtype=float))

    def linf(self, coeffs: np.ndarray) -> float:
        """Grid estimate of the sup norm of the synthesized field."""
        return float(np.abs(self.synthesize(coeffs)).max())


def build_basis(domain: DomainSpec, n_modes: int, M=None) -> Basis:
    """Construct the eigenbasis; see :class:`Basis`."""
    return Basis(domain, n_modes, M=M)
