import math
import warnings

import numpy as np
import pytest

from robinopt import (
    BoundaryFunction,
    Domain,
    GeometryError,
    SpectralRangeError,
    assemble,
    disk_robin_lambda,
    estimate_dirichlet_e1,
    generate_mesh,
    heat_content,
    laplace_transform_check,
    normal_flux,
    robin_principal_eigenvalue,
    solve_resolvent,
)
from robinopt.errors import BoundaryLayerWarning

# frozen disk references (series/continued-fraction oracles)
RATIO_01 = 0.44638996589653446          # I1(1)/I0(1)
INT_U_MINUS1 = math.pi - 2 * math.pi * RATIO_01
LAMBDA_SIGMA_MINUS1 = -2.5865628591780903   # root of k I1(k)/I0(k) = 1
J01_SQ = 5.783185962946785


def test_assembly_identities(disk_mesh_mid):
    asm = assemble(disk_mesh_mid)
    ones = np.ones(len(disk_mesh_mid.nodes))
    assert np.linalg.norm(asm.K @ ones) < 1e-12 * len(ones)
    assert ones @ (asm.M @ ones) == pytest.approx(disk_mesh_mid.area(),
                                                  abs=1e-12)
    B = asm.trace_mass(BoundaryFunction.constant(disk_mesh_mid, 1.0))
    assert ones @ (B @ ones) == pytest.approx(
        disk_mesh_mid.boundary_length(), abs=1e-12
    )


def test_torsion_solution_disk(disk_mesh_mid):
    u = solve_resolvent(disk_mesh_mid, 0.0)
    assert u.meaning == "torsion"
    center = int(np.argmin(np.linalg.norm(disk_mesh_mid.nodes, axis=1)))
    assert u.values[center] == pytest.approx(0.25, abs=2e-4)
    assert u.integral() == pytest.approx(math.pi / 8, rel=2e-3)
    assert np.all(u.values[disk_mesh_mid.boundary_nodes] == 0.0)


def test_resolvent_bessel_integral(disk_mesh_mid):
    u = solve_resolvent(disk_mesh_mid, -1.0)
    assert u.integral() == pytest.approx(INT_U_MINUS1, rel=2e-3)
    interior = np.setdiff1d(np.arange(len(disk_mesh_mid.nodes)),
                            disk_mesh_mid.boundary_nodes)
    assert u.values[interior].min() > 0


def test_resolvent_positivity_and_unit_bound(catalogue):
    # discrete form of the uniform bound |s| U_s < 1
    for name, dom in catalogue.items():
        mesh = generate_mesh(dom, 0.08, boundary_layer_width=0.1)
        for s in (-0.1, -1.0, -10.0):
            u = solve_resolvent(mesh, s)
            assert abs(s) * u.values.max() < 1.0, (name, s)


def test_resolvent_warns_on_unresolved_layer(disk_mesh_coarse):
    with pytest.warns(BoundaryLayerWarning):
        solve_resolvent(disk_mesh_coarse, -1e4)


def test_resolvent_rejects_shift_above_ground(disk_mesh_coarse):
    e1 = estimate_dirichlet_e1(disk_mesh_coarse)
    with pytest.raises(SpectralRangeError):
        solve_resolvent(disk_mesh_coarse, e1 * 1.5)


def test_normal_flux_disk(disk_mesh_mid):
    mesh = disk_mesh_mid
    u = solve_resolvent(mesh, -1.0)
    flux = normal_flux(mesh, u, -1.0)
    # radial derivative of the resolvent at the rim is -I1/I0
    assert flux.values.mean() == pytest.approx(-RATIO_01, rel=1e-2)
    assert flux.spread() < 0.01 * abs(flux.values.mean())
    # divergence-theorem consistency is exact in floating point
    F = u.integral() - mesh.area()  # s^2 int U + s |O| at s = -1
    assert flux.integral == pytest.approx(-F / -1.0, abs=1e-12)


def test_normal_flux_torsion_balance(square_mesh_mid):
    u = solve_resolvent(square_mesh_mid, 0.0)
    flux = normal_flux(square_mesh_mid, u, 0.0)
    assert flux.integral == pytest.approx(-square_mesh_mid.area(),
                                          abs=1e-12)


def test_normal_flux_contract(disk_mesh_mid, square_mesh_mid):
    u = solve_resolvent(square_mesh_mid, 0.0)
    with pytest.raises(GeometryError):
        normal_flux(disk_mesh_mid, u, 0.0)


def test_robin_eigen_neumann_ground(disk_mesh_coarse):
    res = robin_principal_eigenvalue(
        disk_mesh_coarse, BoundaryFunction.constant(disk_mesh_coarse, 0.0)
    )
    assert abs(res.eigenvalue) < 1e-10
    v = res.eigenfunction.values
    assert v.std() < 1e-6 * abs(v.mean())


def test_robin_eigen_constant_negative(disk_mesh_mid):
    res = robin_principal_eigenvalue(
        disk_mesh_mid, BoundaryFunction.constant(disk_mesh_mid, -1.0)
    )
    assert res.eigenvalue == pytest.approx(LAMBDA_SIGMA_MINUS1, rel=2e-3)
    assert res.residual_norm <= 1e-8
    # Rayleigh-quotient consistency
    asm = assemble(disk_mesh_mid)
    A = asm.K + asm.trace_mass(
        BoundaryFunction.constant(disk_mesh_mid, -1.0)
    )
    v = res.eigenfunction.values
    quotient = (v @ (A @ v)) / (v @ (asm.M @ v))
    assert quotient == pytest.approx(res.eigenvalue, abs=1e-10)
    assert v @ (asm.M @ v) == pytest.approx(1.0, abs=1e-10)
    assert v.min() > -1e-6 * v.max()


def test_robin_eigen_positive_sigma_bounded(disk_mesh_coarse):
    res = robin_principal_eigenvalue(
        disk_mesh_coarse, BoundaryFunction.constant(disk_mesh_coarse, 2.0)
    )
    e1 = estimate_dirichlet_e1(disk_mesh_coarse)
    assert 0.0 < res.eigenvalue < e1
    assert res.eigenvalue == pytest.approx(disk_robin_lambda(1.0, 2.0),
                                           rel=5e-3)


def test_robin_eigen_convergence_rate():
    # second-order convergence on the constant-parameter disk case
    errs = []
    for h in (0.2, 0.1, 0.05):
        mesh = generate_mesh(Domain.disk(1.0), h)
        res = robin_principal_eigenvalue(
            mesh, BoundaryFunction.constant(mesh, -1.0)
        )
        errs.append(abs(res.eigenvalue - LAMBDA_SIGMA_MINUS1))
    rate = math.log2(errs[1] / errs[2])
    assert rate >= 1.7, errs


def test_robin_eigen_monotone_in_sigma(disk_mesh_coarse):
    rng = np.random.default_rng(11)
    nb = len(disk_mesh_coarse.boundary_nodes)
    for _ in range(20):
        lo = rng.uniform(-3.0, 1.0, nb)
        gap = rng.uniform(0.0, 2.0, nb)
        lam_lo = robin_principal_eigenvalue(
            disk_mesh_coarse, BoundaryFunction(disk_mesh_coarse, lo)
        ).eigenvalue
        lam_hi = robin_principal_eigenvalue(
            disk_mesh_coarse, BoundaryFunction(disk_mesh_coarse, lo + gap)
        ).eigenvalue
        assert lam_lo <= lam_hi + 1e-9


def test_dirichlet_ground_energy(disk_mesh_mid, square_mesh_mid):
    assert estimate_dirichlet_e1(disk_mesh_mid) == pytest.approx(
        J01_SQ, rel=5e-3
    )
    assert estimate_dirichlet_e1(square_mesh_mid) == pytest.approx(
        2 * math.pi**2, rel=1e-2
    )
    # the half-percent figure holds at h = 0.02
    fine = generate_mesh(Domain.rectangle(1.0, 1.0), 0.02)
    assert estimate_dirichlet_e1(fine) == pytest.approx(
        2 * math.pi**2, rel=5e-3
    )


def test_dirichlet_ground_energy_upper_bound():
    # conforming elements approach from above
    vals = []
    for h in (0.1, 0.05):
        mesh = generate_mesh(Domain.disk(1.0), h)
        vals.append(estimate_dirichlet_e1(mesh))
    assert vals[1] <= vals[0]
    assert vals[1] >= J01_SQ - 1e-9


def test_heat_content_monotone_bounded(square_mesh_mid):
    times = np.geomspace(1e-3, 0.5, 12)
    curve = heat_content(square_mesh_mid, times)
    assert np.all(np.diff(curve.values) < 0)
    assert curve.values.max() < square_mesh_mid.area()
    assert curve.values.min() > 0


def test_heat_content_validates_times(square_mesh_mid):
    with pytest.raises(GeometryError):
        heat_content(square_mesh_mid, [0.0, 0.1])
    with pytest.raises(GeometryError):
        heat_content(square_mesh_mid, [0.2, 0.1])
    with pytest.raises(GeometryError):
        heat_content(square_mesh_mid, [1e3])


def test_laplace_transform_identity_smoke(square_mesh_mid):
    out = laplace_transform_check(square_mesh_mid, -1.0)
    assert out["rhs"] == pytest.approx(out["lhs"], rel=0.02)
    with pytest.raises(GeometryError):
        laplace_transform_check(square_mesh_mid, 0.5)


def test_laplace_transform_limits(square_mesh_mid):
    # s -> 0-: both sides approach the torsion integral
    out = laplace_transform_check(square_mesh_mid, -1e-3)
    torsion = solve_resolvent(square_mesh_mid, 0.0).integral()
    assert out["lhs"] == pytest.approx(torsion, rel=1e-2)
    assert out["rhs"] == pytest.approx(torsion, rel=2e-2)
    # strongly negative s: leading order area/|s| with a boundary
    # correction of relative size |dO| / (|O| sqrt(|s|))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BoundaryLayerWarning)
        lhs = solve_resolvent(square_mesh_mid, -400.0).integral()
    area = square_mesh_mid.area()
    assert lhs * 400.0 / area == pytest.approx(1.0, abs=0.25)
    assert abs(lhs * 400.0 / area - 1.0) <= 1.5 * 4.0 / (area * 20.0)
