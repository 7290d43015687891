"""Finite-horizon linear-quadratic control problems condensed to dense QPs.

States are eliminated through the stacked prediction equation, leaving a
QP in the input sequence whose quadratic part and constraint matrix are
shared across initial states; only the linear term and the constraint
offsets vary.  Box constraints on states and inputs map to four row
blocks (state upper/lower, input upper/lower), individually toggleable.
"""

import json
import os
from dataclasses import dataclass

import numpy as np

from . import linalg, matio, qp
from .problems import QpProblem, QuadCost


@dataclass(frozen=True)
class MpcProblem:
    """Horizon problem data: dynamics, quadratic weights, box bounds,
    initial state, and state/input/output references."""

    H: np.ndarray
    J: np.ndarray
    J_r: np.ndarray
    Q_x: np.ndarray
    Q_N: np.ndarray
    R: np.ndarray
    horizon: int
    x_min: float
    x_max: float
    u_min: float
    u_max: float
    x0: np.ndarray
    x_ref: np.ndarray
    u_ref: np.ndarray
    r_ref: np.ndarray

    def __post_init__(self):
        H = np.asarray(self.H, dtype=float)
        J = np.asarray(self.J, dtype=float)
        J_r = np.asarray(self.J_r, dtype=float)
        nx = H.shape[0]
        if H.shape != (nx, nx) or J.shape[0] != nx or J_r.shape[0] != nx:
            raise ValueError("inconsistent dynamics dimensions")
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if not (self.x_min < self.x_max and self.u_min < self.u_max):
            raise ValueError("box bounds must satisfy min < max")
        for name, W, dim in (("Q_x", self.Q_x, nx), ("Q_N", self.Q_N, nx),
                             ("R", self.R, J.shape[1])):
            W = linalg.check_symmetric(W, name=name)
            if W.shape[0] != dim or not linalg.is_positive_definite(W):
                raise ValueError(f"{name} must be PD of dimension {dim}")
        for name, v, dim in (("x0", self.x0, nx), ("x_ref", self.x_ref, nx),
                             ("u_ref", self.u_ref, J.shape[1]),
                             ("r_ref", self.r_ref, J_r.shape[1])):
            v = np.asarray(v, dtype=float).reshape(-1)
            if v.shape[0] != dim:
                raise ValueError(f"{name} must have length {dim}")
            object.__setattr__(self, name, v)
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "J_r", J_r)

    @property
    def nx(self):
        return self.H.shape[0]

    @property
    def nu(self):
        return self.J.shape[1]

    @property
    def nr(self):
        return self.J_r.shape[1]

    def with_initial_state(self, x0):
        return MpcProblem(self.H, self.J, self.J_r, self.Q_x, self.Q_N,
                          self.R, self.horizon, self.x_min, self.x_max,
                          self.u_min, self.u_max, np.asarray(x0, dtype=float),
                          self.x_ref, self.u_ref, self.r_ref)


def prediction_matrices(mpc):
    """Stacked maps from initial state, inputs, and reference to states.

    Row block i holds the state i+1 steps ahead.
    """
    nx, nu, nr, Np = mpc.nx, mpc.nu, mpc.nr, mpc.horizon
    theta = np.zeros((nx * Np, nx))
    phi = np.zeros((nx * Np, nu * Np))
    phi_r = np.zeros((nx * Np, nr * Np))
    powers = [np.eye(nx)]
    for _ in range(Np):
        powers.append(mpc.H @ powers[-1])
    for i in range(Np):
        theta[i * nx:(i + 1) * nx] = powers[i + 1]
        for j in range(i + 1):
            blk = powers[i - j]
            phi[i * nx:(i + 1) * nx, j * nu:(j + 1) * nu] = blk @ mpc.J
            phi_r[i * nx:(i + 1) * nx, j * nr:(j + 1) * nr] = blk @ mpc.J_r
    return theta, phi, phi_r


def simulate(mpc, inputs):
    """Step the recursion forward; returns states 1..horizon stacked."""
    inputs = np.asarray(inputs, dtype=float).reshape(mpc.horizon, mpc.nu)
    x = mpc.x0.copy()
    out = []
    for t in range(mpc.horizon):
        x = mpc.H @ x + mpc.J @ inputs[t] + mpc.J_r @ mpc.r_ref
        out.append(x.copy())
    return np.concatenate(out)


@dataclass(frozen=True)
class CondensedQp:
    """Dense QP over the stacked inputs plus its building blocks.

    ``row_blocks`` names the constraint blocks actually stacked into A,
    in order, from {'state-upper', 'state-lower', 'input-upper',
    'input-lower'}.
    """

    theta: np.ndarray
    phi: np.ndarray
    phi_r: np.ndarray
    q_bar: np.ndarray
    r_bar: np.ndarray
    Q: np.ndarray
    q: np.ndarray
    A: np.ndarray
    b: np.ndarray
    row_blocks: tuple
    problem: QpProblem


def condense(mpc, state_upper=True, state_lower=True, input_upper=True,
             input_lower=True):
    """Eliminate the states and assemble the dense QP.

    The quadratic part and constraint matrix depend only on the plant and
    weights; the linear term and offsets absorb the initial state and
    references.  At least one row block must be enabled.
    """
    nx, nu, Np = mpc.nx, mpc.nu, mpc.horizon
    theta, phi, phi_r = prediction_matrices(mpc)
    q_bar = np.zeros((nx * Np, nx * Np))
    for i in range(Np - 1):
        q_bar[i * nx:(i + 1) * nx, i * nx:(i + 1) * nx] = mpc.Q_x
    q_bar[(Np - 1) * nx:, (Np - 1) * nx:] = mpc.Q_N
    r_bar = np.kron(np.eye(Np), mpc.R)
    Q = r_bar + phi.T @ q_bar @ phi
    Q = (Q + Q.T) / 2
    ref_inputs = np.tile(mpc.r_ref, Np)
    offset = theta @ mpc.x0 + phi_r @ ref_inputs
    q = phi.T @ (q_bar @ (offset - np.tile(mpc.x_ref, Np))) \
        - r_bar @ np.tile(mpc.u_ref, Np)
    blocks, rows_a, rows_b = [], [], []
    if state_upper:
        blocks.append("state-upper")
        rows_a.append(phi)
        rows_b.append(np.full(nx * Np, mpc.x_max) - offset)
    if state_lower:
        blocks.append("state-lower")
        rows_a.append(-phi)
        rows_b.append(offset - np.full(nx * Np, mpc.x_min))
    if input_upper:
        blocks.append("input-upper")
        rows_a.append(np.eye(nu * Np))
        rows_b.append(np.full(nu * Np, mpc.u_max))
    if input_lower:
        blocks.append("input-lower")
        rows_a.append(-np.eye(nu * Np))
        rows_b.append(np.full(nu * Np, -mpc.u_min))
    if not blocks:
        raise ValueError("at least one constraint block must be enabled")
    A = np.vstack(rows_a)
    b = np.concatenate(rows_b)
    problem = QpProblem(QuadCost(Q, q), A, b)
    return CondensedQp(theta=theta, phi=phi, phi_r=phi_r, q_bar=q_bar,
                       r_bar=r_bar, Q=Q, q=q, A=A, b=b,
                       row_blocks=tuple(blocks), problem=problem)


def normalize_rows(problem):
    """Rescale every constraint row to unit Euclidean norm.

    The offsets scale by the same factors, so the feasible set and the
    optimizer are unchanged.  Zero rows are rejected.
    """
    norms = np.linalg.norm(problem.A, axis=1)
    if np.any(norms <= 0):
        raise ValueError("A has a zero row")
    scaled = QpProblem(problem.cost, problem.A / norms[:, None],
                       problem.c / norms)
    return scaled, norms


def random_plant(nx, nu, nr, seed, spectral_radius=0.95, max_tries=50):
    """Sample a stable plant: state matrix scaled to the given spectral
    radius, unit-norm input columns.  Redraws until the condensed
    quadratic part is PD (it always is with PD input weights, so the
    first draw normally passes)."""
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        H = rng.standard_normal((nx, nx))
        radius = np.abs(np.linalg.eigvals(H)).max()
        if radius == 0:
            continue
        H *= spectral_radius / radius
        J = rng.standard_normal((nx, nu))
        J /= np.linalg.norm(J, axis=0, keepdims=True)
        J_r = rng.standard_normal((nx, nr))
        J_r /= np.linalg.norm(J_r, axis=0, keepdims=True)
        probe = MpcProblem(H, J, J_r, np.eye(nx), np.eye(nx), np.eye(nu),
                           2, -1.0, 1.0, -1.0, 1.0, np.zeros(nx),
                           np.zeros(nx), np.zeros(nu), np.zeros(nr))
        if linalg.is_positive_definite(condense(probe).Q):
            return H, J, J_r
    raise RuntimeError("could not sample a usable plant")


def grid_initial_states(values, nx):
    """Cartesian product of per-coordinate values, row-major order."""
    grids = np.meshgrid(*([np.asarray(values, dtype=float)] * nx),
                        indexing="ij")
    return np.stack([g.reshape(-1) for g in grids], axis=1)


@dataclass
class BatchEntry:
    x0: np.ndarray
    q: np.ndarray
    b: np.ndarray
    feasible: bool
    probe_status: str
    probe_iterations: int


@dataclass
class MpcBatch:
    """Condensed instances sharing (Q, A); per-entry (q, b) and the
    feasibility probe verdicts."""

    Q: np.ndarray
    A: np.ndarray
    entries: list
    row_blocks: tuple
    normalized: bool

    @property
    def feasible_entries(self):
        return [e for e in self.entries if e.feasible]

    def problem(self, entry):
        return QpProblem(QuadCost(self.Q, entry.q), self.A, entry.b)


def generate_batch(template, initial_states, probe=True, probe_rho=None,
                   probe_alpha=1.0, probe_tol=1e-5, probe_max_iter=5000,
                   normalize=True, max_feasible=None, **condense_kwargs):
    """One condensed QP per initial state, with a feasibility probe.

    The probe is a capped solver run: instances that reach the residual
    tolerance are feasible (they produced a certified optimum); runs that
    trip the divergence guard or exhaust the cap are reported infeasible
    or unresolved and filtered from the feasible set.  ``max_feasible``
    stops probing once enough feasible instances are found (remaining
    entries are left unprobed).
    """
    initial_states = np.atleast_2d(np.asarray(initial_states, dtype=float))
    if initial_states.shape[0] == 0:
        raise ValueError("initial_states is empty")
    base = condense(template.with_initial_state(initial_states[0]),
                    **condense_kwargs)
    shared = base.problem
    norms = None
    if normalize:
        shared, norms = normalize_rows(shared)
    if probe and probe_rho is None:
        probe_rho = qp.tune(qp.spectral(shared)).rho_star
    entries = []
    found = 0
    for x0 in initial_states:
        inst = condense(template.with_initial_state(x0), **condense_kwargs)
        b = inst.b if norms is None else inst.b / norms
        prob = QpProblem(QuadCost(shared.Q, inst.q), shared.A, b)
        if probe and (max_feasible is None or found < max_feasible):
            sol = qp.solve(prob, probe_rho, alpha=probe_alpha, tol=probe_tol,
                           max_iter=probe_max_iter, diagnostics=False)
            feasible = sol.converged
            status = sol.status
            iters = sol.iterations
            found += int(feasible)
        else:
            feasible, status, iters = False, "unprobed", 0
        entries.append(BatchEntry(x0=x0.copy(), q=inst.q, b=b,
                                  feasible=feasible, probe_status=status,
                                  probe_iterations=iters))
    return MpcBatch(Q=shared.Q, A=shared.A, entries=entries,
                    row_blocks=base.row_blocks, normalized=normalize)


def write_manifest(batch, outdir):
    """Write shared matrices, per-instance vectors, and a JSON manifest."""
    os.makedirs(outdir, exist_ok=True)
    matio.write_matrix(os.path.join(outdir, "Q.txt"), batch.Q)
    matio.write_matrix(os.path.join(outdir, "A.txt"), batch.A)
    manifest = {"shared": {"Q": "Q.txt", "A": "A.txt"},
                "row_blocks": list(batch.row_blocks),
                "normalized": batch.normalized, "instances": []}
    for i, e in enumerate(batch.entries):
        qf, bf = f"q_{i:04d}.txt", f"b_{i:04d}.txt"
        matio.write_vector(os.path.join(outdir, qf), e.q)
        matio.write_vector(os.path.join(outdir, bf), e.b)
        manifest["instances"].append({
            "x0": e.x0.tolist(), "q": qf, "b": bf, "feasible": e.feasible,
            "probe_status": e.probe_status,
            "probe_iterations": e.probe_iterations})
    path = os.path.join(outdir, "manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2)
    return path


def read_manifest(path):
    """Load a batch written by :func:`write_manifest`."""
    with open(path) as fh:
        manifest = json.load(fh)
    base = os.path.dirname(path)
    Q = matio.read_matrix(os.path.join(base, manifest["shared"]["Q"]))
    A = matio.read_matrix(os.path.join(base, manifest["shared"]["A"]))
    entries = []
    for inst in manifest["instances"]:
        entries.append(BatchEntry(
            x0=np.asarray(inst["x0"], dtype=float),
            q=matio.read_vector(os.path.join(base, inst["q"])),
            b=matio.read_vector(os.path.join(base, inst["b"])),
            feasible=bool(inst["feasible"]),
            probe_status=inst["probe_status"],
            probe_iterations=int(inst["probe_iterations"])))
    return MpcBatch(Q=Q, A=A, entries=entries,
                    row_blocks=tuple(manifest["row_blocks"]),
                    normalized=bool(manifest["normalized"]))
