use thiserror::Error;

use crate::config::ConfigError;
use crate::grid::GridError;
use crate::harness::HarnessError;
use crate::kinetic::KineticError;
use crate::pde::PdeError;
use crate::snapshot::SnapshotError;
use crate::turning::TurningError;
use crate::velocity::VelocityError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
    #[error(transparent)]
    Kinetic(#[from] KineticError),
    #[error(transparent)]
    Pde(#[from] PdeError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error(transparent)]
    Turning(#[from] TurningError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Velocity(#[from] VelocityError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn kinetic_numerical(e: &KineticError) -> bool {
    matches!(
        e,
        KineticError::TooManyReflections { .. } | KineticError::Escaped { .. } | KineticError::NonFinite(_)
    )
}

fn pde_numerical(e: &PdeError) -> bool {
    matches!(
        e,
        PdeError::Unstable { .. } | PdeError::NonFinite { .. } | PdeError::Negative { .. } | PdeError::BlowUp { .. }
    )
}

impl Error {
    /// A run that started and then broke down, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Kinetic(e) | Error::Harness(HarnessError::Kinetic(e)) => kinetic_numerical(e),
            Error::Pde(e) | Error::Harness(HarnessError::Pde(e)) => pde_numerical(e),
            Error::Snapshot(SnapshotError::NonFinite { .. }) => true,
            _ => false,
        }
    }

    /// 2 for numerical aborts, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        if self.is_numerical() {
            2
        } else {
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        let e: Error = PdeError::BlowUp {
            max_u: 1e7,
            bound: 1e6,
            time: 1.0,
        }
        .into();
        assert_eq!(e.exit_code(), 2);
        let e: Error = HarnessError::Kinetic(KineticError::NonFinite("x")).into();
        assert_eq!(e.exit_code(), 2);
        let e: Error = ConfigError::Conflict("x".into()).into();
        assert_eq!(e.exit_code(), 1);
        let e: Error = KineticError::InvalidParameter { name: "dt", value: 0.0 }.into();
        assert_eq!(e.exit_code(), 1);
    }
}
