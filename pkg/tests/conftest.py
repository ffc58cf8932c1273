import pytest

from robinopt import Domain, generate_mesh


@pytest.fixture(scope="session")
def disk_mesh_coarse():
    """Unit disk at h=0.08 with a moderate boundary layer."""
    return generate_mesh(Domain.disk(1.0), 0.08, boundary_layer_width=0.12)


@pytest.fixture(scope="session")
def disk_mesh_mid():
    """Unit disk at h=0.05, layered for shifts down to about -300."""
    return generate_mesh(Domain.disk(1.0), 0.05, boundary_layer_width=0.045)


@pytest.fixture(scope="session")
def square_mesh_mid():
    return generate_mesh(Domain.rectangle(1.0, 1.0), 0.05,
                         boundary_layer_width=0.1)


@pytest.fixture(scope="session")
def catalogue():
    return {
        "disk": Domain.disk(1.0),
        "annulus": Domain.annulus(2.0, 1.0),
        "rect": Domain.rectangle(1.0, 1.0),
        "ngon": Domain.regular_polygon(6, 1.0),
        "lshape": Domain.lshape(),
    }
