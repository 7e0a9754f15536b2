import math

import numpy as np
import pytest

from netwave.graph import make_circuit, make_star, make_tree_chain
from netwave.resolvent import (
    HUGE,
    ResolventError,
    assemble_generator,
    dissipation_defect,
    resolvent_norm,
    sweep,
)

GRAPHS = [
    make_tree_chain(["1", "0.9"], [1.0]),
    make_tree_chain(["1", "0.8", "1.3"], [1.0, 2.0]),
    make_tree_chain(["1", "pi*1", "1"], [1.0, 1.0]),
    make_star("1", "1", "sqrt(2)"),
    make_circuit("sqrt(2)"),
]


def test_generator_dissipative_on_random_states():
    rng = np.random.default_rng(31)
    for graph in GRAPHS:
        gen = assemble_generator(graph, 1.0 / 16.0)
        for _ in range(50):
            z = rng.standard_normal(gen.dim)
            wnorm = float(np.real(np.vdot(gen.W @ z, z)))
            assert dissipation_defect(gen, z) <= 1e-12 * max(wnorm, 1.0)


def test_dissipation_matches_damped_vertex_velocities():
    # Re<A z, z>_W equals minus the sum of squared velocities at the damped
    # vertices, exactly
    graph = make_tree_chain(["1", "0.9"], [1.0])
    gen = assemble_generator(graph, 1.0 / 16.0)
    rng = np.random.default_rng(7)
    damped = [i for i in range(gen.nfield)
              if gen.A[gen.nfield + i, gen.nfield + i] != 0]
    z = rng.standard_normal(gen.dim)
    defect = float(np.real(np.vdot(gen.W @ (gen.A @ z), z)))
    vsq = sum(z[gen.nfield + i] ** 2 for i in damped)
    assert abs(defect + vsq) <= 1e-10 * max(1.0, abs(defect))


def test_resolvent_norm_symmetric_in_beta():
    graph = make_tree_chain(["1", "0.9"], [1.0])
    gen = assemble_generator(graph, 1.0 / 32.0)
    for beta in (0.7, 3.1, 12.0):
        n1 = resolvent_norm(gen, beta)
        n2 = resolvent_norm(gen, -beta)
        assert abs(n1 - n2) <= 1e-3 * n1


def test_resolvent_norm_mesh_converged_on_stable_graph():
    graph = make_tree_chain(["1", "0.9"], [1.0])
    vals = []
    for cells in (32, 64):
        gen = assemble_generator(graph, 1.0 / cells)
        vals.append(resolvent_norm(gen, 2.0))
    assert abs(vals[1] - vals[0]) <= 0.05 * vals[0]


def test_resolvent_norm_diverges_at_axis_eigenvalue():
    # interior pi edge puts an eigenvalue at i: the discrete norm at beta = 1
    # must blow up under refinement
    graph = make_tree_chain(["1", "pi*1", "1"], [1.0, 1.0])
    vals = []
    for cells in (16, 32, 64):
        gen = assemble_generator(graph, 1.0 / cells)
        vals.append(resolvent_norm(gen, 1.0))
    assert vals[1] > 2.0 * vals[0]
    assert vals[2] > 2.0 * vals[1]


def test_assemble_rejects_coarse_mesh():
    with pytest.raises(ResolventError):
        assemble_generator(make_tree_chain(["1", "0.9"], [1.0]), 0.5)


def test_sweep_bounded_on_stable_chain():
    graph = make_tree_chain(["1", "0.9"], [1.0])
    report = sweep(graph, np.linspace(0.0, 6.0, 13),
                   mesh_ladder=[24, 36, 48])
    assert report.verdict == "bounded"
    assert report.sup_change < 0.2


def test_sweep_unbounded_on_pi_chain():
    graph = make_tree_chain(["1", "pi*1", "1"], [1.0, 1.0])
    report = sweep(graph, np.linspace(0.5, 1.5, 11),
                   mesh_ladder=[16, 32, 64])
    assert report.verdict == "unbounded"
    assert abs(report.peak_beta - 1.0) <= 0.2


def test_sweep_empty_grid_inconclusive():
    report = sweep(make_tree_chain(["1", "0.9"], [1.0]), [])
    assert report.verdict == "inconclusive"
    assert report.curves == []


def test_discrete_eigenvalues_approach_characteristic_roots():
    # the least-damped discrete mode converges to the nearest char-det root
    from scipy.sparse.linalg import eigs

    from netwave.spectral import newton_refine

    graph = make_tree_chain(["1", "0.9"], [1.0])
    target, _ = newton_refine(graph, -0.3 + 2.5j)
    errs = []
    for cells in (16, 32):
        gen = assemble_generator(graph, 1.0 / cells)
        vals = eigs(gen.A.astype(complex), k=12, sigma=target,
                    return_eigenvectors=False)
        errs.append(min(abs(v - target) for v in vals))
    assert errs[1] <= 0.4 * errs[0]
