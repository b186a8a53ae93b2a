import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running integration test")


class WaveguideBundle:
    """Desk-scale waveguide experiment, computed once per session.

    One full simulation set (true data, reference data, true and reference
    snapshot fields) plus the factored matrices and imaging products.
    Aperture and sampling-interval studies reuse the same simulations by
    sensor subsetting and integer resampling, which reproduce the smaller
    experiments exactly.
    """

    def __init__(self):
        import numpy as np

        from waverom import rom, solver
        from waverom.internal import SnapshotBasis
        from waverom.medium import ImagingGrid, preset_scenario

        medium, array, pulse, tau, n = preset_scenario("waveguide", mesh=8)
        self.medium, self.array, self.pulse = medium, array, pulse
        self.tau, self.n = tau, n
        self.reflector_ranges = (4.0, 6.0)
        self.grid = ImagingGrid.aligned(medium, (6.0, 26.0), (1.5, 9.5),
                                        stride=(2, 1))

        self.records = solver.simulate_all_shots(medium, array, pulse, tau, n)
        self.data = solver.compute_data_tensor(self.records)
        self.data_ref = solver.compute_data_tensor(
            solver.simulate_all_shots(medium.reference(), array, pulse,
                                      tau, n))
        self.fields_true = solver.simulate_snapshots(medium, array, pulse,
                                                     tau, n, self.grid)
        self.fields_ref = solver.simulate_snapshots(
            medium.reference(), array, pulse, tau, n, self.grid)

        M = rom.assemble_mass(self.data)
        self.lam = rom.default_lambda_min(M, noisy=False)
        self.R = rom.block_cholesky(rom.regularize_mass(M, self.lam))
        self.P = rom.rom_propagator(self.R, rom.assemble_stiffness(self.data))
        M_ref = rom.assemble_mass(self.data_ref)
        self.R_ref = rom.block_cholesky(rom.regularize_mass(M_ref, self.lam))
        self.P_ref = rom.rom_propagator(
            self.R_ref, rom.assemble_stiffness(self.data_ref))
        self.basis_ref = SnapshotBasis(
            grid=self.grid, V=rom.solve_upper_left(
                self.R_ref, self.fields_ref.U.T).T,
            R=self.R_ref, tau=tau, n=n, m=array.m)
        self.basis_true = SnapshotBasis(
            grid=self.grid, V=rom.solve_upper_left(
                self.R, self.fields_true.U.T).T,
            R=self.R, tau=tau, n=n, m=array.m)

    def images(self):
        if not hasattr(self, "_images"):
            from waverom import imaging

            norm = imaging.image_norm(self.R, self.basis_ref)
            rtm = imaging.image_rtm(self.data, self.medium.reference(),
                                    self.array, self.pulse, self.grid)
            self._images = {
                "norm": norm,
                "norm_dz": imaging.range_derivative(norm),
                "bp": imaging.image_backprojection(self.P, self.P_ref,
                                                   self.basis_ref),
                "rtm": rtm,
                "rtm_dz": imaging.range_derivative(rtm),
            }
        return self._images

    def aperture_study(self, count):
        """Sub-array experiment with the same sensor spacing."""
        from waverom import rom
        from waverom.internal import basis_from

        _, idx = self.array.subarray(count)
        data = self.data.subarray(idx)
        data_ref = self.data_ref.subarray(idx)
        lam = rom.default_lambda_min(rom.assemble_mass(data), noisy=False)
        basis_true = basis_from(data, self.fields_true.subarray(idx), lam)
        basis_ref = basis_from(data_ref, self.fields_ref.subarray(idx), lam)
        return basis_true, basis_ref

    def tau_study(self, factor):
        """The same experiment sampled at factor * tau (integer factor)."""
        from waverom import rom
        from waverom.internal import basis_from

        n_new = (self.n - 1) // factor + 1
        while factor * (2 * n_new - 1) > 2 * self.n - 1:
            n_new -= 1
        data = self.data.subsample(factor, n_new)
        data_ref = self.data_ref.subsample(factor, n_new)
        lam = rom.default_lambda_min(rom.assemble_mass(data), noisy=False)
        basis_true = basis_from(data, self.fields_true.subsample(
            factor, n_new), lam)
        basis_ref = basis_from(data_ref, self.fields_ref.subsample(
            factor, n_new), lam)
        return basis_true, basis_ref


@pytest.fixture(scope="session")
def waveguide():
    return WaveguideBundle()
