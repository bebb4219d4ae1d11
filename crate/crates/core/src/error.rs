use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Poly(#[from] crate::polymodel::PolyError),
    #[error(transparent)]
    Roots(#[from] crate::roots::RootError),
    #[error(transparent)]
    Energy(#[from] crate::energy::EnergyError),
    #[error(transparent)]
    KacRice(#[from] crate::kacrice::KacRiceError),
    #[error(transparent)]
    Quadrature(#[from] crate::quadrature::QuadError),
    #[error(transparent)]
    Stats(#[from] crate::stats::StatsError),
    #[error(transparent)]
    Descent(#[from] crate::minimizer::DescentError),
    #[error(transparent)]
    Harness(#[from] crate::harness::HarnessError),
}
