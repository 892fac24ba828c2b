//! Covariances of kernel-driven Gaussian IDT processes, their scaling and
//! Lamperti checks, spectral measures and the Hirsch quadratic form.

mod covariance;
mod density;
mod hirsch;

pub use covariance::{
    covariance_phi, covariance_phi_quadrature, lamperti_covariance, scaling_check, spectral_hat, write_covariance_csv,
    CovarianceFn, ScalingReport,
};
pub use density::{
    closed_covariance, fourier_by_quadrature, table_spectral, table_spectral_density, write_density_csv, SpectralDensity,
    SpectralForm,
};
pub use hirsch::{hirsch_matrix, hirsch_min_eig, HirschSpectrum};
