use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandName {
    Delta,
    Theta,
    Alpha,
    Beta,
    Gamma,
}

impl BandName {
    pub const ALL: [BandName; 5] = [
        BandName::Delta,
        BandName::Theta,
        BandName::Alpha,
        BandName::Beta,
        BandName::Gamma,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BandName::Delta => "delta",
            BandName::Theta => "theta",
            BandName::Alpha => "alpha",
            BandName::Beta => "beta",
            BandName::Gamma => "gamma",
        }
    }
}

impl fmt::Display for BandName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BandName {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        BandName::ALL
            .into_iter()
            .find(|b| b.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| CoreError::InvalidConfig(format!("unknown band {s:?}")))
    }
}

/// Half-open frequency interval `[lo_hz, hi_hz)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub name: BandName,
    pub lo_hz: f64,
    pub hi_hz: f64,
}

/// Five ordered, disjoint bands. Stored in ascending frequency order;
/// [`BandSpec::descending`] gives the high-to-low presentation order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSpec {
    bands: Vec<Band>,
}

pub fn default_band_spec() -> BandSpec {
    let edges = [0.0, 4.0, 8.0, 16.0, 32.0, 52.0];
    BandSpec {
        bands: BandName::ALL
            .iter()
            .enumerate()
            .map(|(i, &name)| Band {
                name,
                lo_hz: edges[i],
                hi_hz: edges[i + 1],
            })
            .collect(),
    }
}

impl Default for BandSpec {
    fn default() -> Self {
        default_band_spec()
    }
}

impl BandSpec {
    pub fn new(bands: Vec<Band>) -> Result<Self> {
        if bands.len() != 5 {
            return Err(CoreError::InvalidConfig(format!(
                "expected 5 bands, got {}",
                bands.len()
            )));
        }
        for (i, b) in bands.iter().enumerate() {
            if !(b.lo_hz >= 0.0 && b.lo_hz < b.hi_hz && b.hi_hz.is_finite()) {
                return Err(CoreError::InvalidConfig(format!(
                    "band {} has edges [{}, {})",
                    b.name, b.lo_hz, b.hi_hz
                )));
            }
            if i > 0 && b.lo_hz < bands[i - 1].hi_hz {
                return Err(CoreError::InvalidConfig(format!(
                    "band {} overlaps or precedes band {}",
                    b.name,
                    bands[i - 1].name
                )));
            }
        }
        Ok(Self { bands })
    }

    pub fn bands(&self) -> &[Band] {
        &self.bands
    }

    pub fn len(&self) -> usize {
        self.bands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bands.is_empty()
    }

    pub fn position(&self, name: BandName) -> Option<usize> {
        self.bands.iter().position(|b| b.name == name)
    }

    pub fn max_hz(&self) -> f64 {
        self.bands.last().map_or(0.0, |b| b.hi_hz)
    }

    /// Checks that every edge falls on the leaf grid of the given width.
    pub fn check_alignment(&self, leaf_hz: f64) -> Result<()> {
        for b in &self.bands {
            for edge_hz in [b.lo_hz, b.hi_hz] {
                let ratio = edge_hz / leaf_hz;
                if (ratio - ratio.round()).abs() > 1e-9 {
                    return Err(CoreError::MisalignedBand { edge_hz, leaf_hz });
                }
            }
        }
        Ok(())
    }

    pub fn descending(&self) -> Vec<Band> {
        reverse_band_order(&self.bands)
    }
}

/// Reverses a per-band sequence between ascending (internal) and
/// highest-to-lowest (presentation) order.
pub fn reverse_band_order<T: Clone>(values: &[T]) -> Vec<T> {
    values.iter().rev().cloned().collect()
}
