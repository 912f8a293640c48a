//! Reference heterostructures (GaAs effective mass, 0.23 eV barriers).

use crate::error::{Error, Result};
use crate::potential::{Layer, PotentialProfile};

pub const MASS_RATIO: f64 = 0.067;
pub const BARRIER_HEIGHT: f64 = 0.23;
/// Centre of the initial packet in nm.
pub const PACKET_CENTRE: f64 = -5.0;
/// Width of the initial packet in nm.
pub const PACKET_WIDTH: f64 = 0.5;

/// Single 8 nm barrier.
pub fn single_barrier() -> PotentialProfile {
    PotentialProfile::new(vec![Layer::new(8.0, BARRIER_HEIGHT)], MASS_RATIO)
        .expect("valid preset")
}

/// Two 5 nm barriers around a 5 nm well.
pub fn double_barrier() -> PotentialProfile {
    let v = BARRIER_HEIGHT;
    PotentialProfile::new(
        vec![Layer::new(5.0, v), Layer::new(5.0, 0.0), Layer::new(5.0, v)],
        MASS_RATIO,
    )
    .expect("valid preset")
}

/// Four barriers (3, 5, 5, 3 nm) separated by 3 nm wells.
pub fn quadruple_barrier() -> PotentialProfile {
    let v = BARRIER_HEIGHT;
    PotentialProfile::new(
        vec![
            Layer::new(3.0, v),
            Layer::new(3.0, 0.0),
            Layer::new(5.0, v),
            Layer::new(3.0, 0.0),
            Layer::new(5.0, v),
            Layer::new(3.0, 0.0),
            Layer::new(3.0, v),
        ],
        MASS_RATIO,
    )
    .expect("valid preset")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Single,
    Double,
    Quadruple,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Single, Preset::Double, Preset::Quadruple];

    pub fn parse(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "sb" => Some(Preset::Single),
            "db" => Some(Preset::Double),
            "qb" => Some(Preset::Quadruple),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Single => "sb",
            Preset::Double => "db",
            Preset::Quadruple => "qb",
        }
    }

    pub fn profile(&self) -> PotentialProfile {
        match self {
            Preset::Single => single_barrier(),
            Preset::Double => double_barrier(),
            Preset::Quadruple => quadruple_barrier(),
        }
    }

    /// Mean packet energy in eV: half the barrier for `sb`, the first
    /// resonance for `db`, the second for `qb`. `energies` are `(E_n, Gamma_n)`.
    pub fn packet_energy(&self, energies: &[(f64, f64)]) -> Result<f64> {
        let resonance = |i: usize| {
            energies
                .get(i)
                .map(|e| e.0)
                .ok_or_else(|| Error::InvalidArgument(format!("catalog has fewer than {} poles", i + 1)))
        };
        match self {
            Preset::Single => Ok(BARRIER_HEIGHT / 2.0),
            Preset::Double => resonance(0),
            Preset::Quadruple => resonance(1),
        }
    }

    /// Catalog size used by the reference runs.
    pub fn default_pole_count(&self) -> usize {
        match self {
            Preset::Single => 1000,
            Preset::Double => 1000,
            Preset::Quadruple => 4000,
        }
    }
}
