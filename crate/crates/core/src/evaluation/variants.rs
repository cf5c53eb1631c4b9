//! Context-set variants for ablation: none, wrong, or the expert sets.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::contexts::{ContextSet, ContextSets, HourInterval, Support};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextVariant {
    Expert,
    /// No contextual information: every weight is 1.
    Nc,
    /// Wrong contexts: supports permuted between contexts and hours shifted.
    Wc,
}

impl ContextVariant {
    pub const ALL: [ContextVariant; 3] = [ContextVariant::Expert, ContextVariant::Nc, ContextVariant::Wc];

    pub fn as_str(self) -> &'static str {
        match self {
            ContextVariant::Expert => "expert",
            ContextVariant::Nc => "nc",
            ContextVariant::Wc => "wc",
        }
    }

    /// Row label used in result tables.
    pub fn model_name(self) -> &'static str {
        match self {
            ContextVariant::Expert => "HELIOS",
            ContextVariant::Nc => "HELIOS-NC",
            ContextVariant::Wc => "HELIOS-WC",
        }
    }
}

impl fmt::Display for ContextVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ContextVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ContextVariant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown context variant `{s}`")))
    }
}

fn shift_interval(iv: HourInterval, by: u32) -> HourInterval {
    let start = (iv.start + by) % 24;
    let end = match (iv.end + by) % 24 {
        0 => 24,
        e => e,
    };
    HourInterval::new(start, end)
}

fn scramble(set: &ContextSet, rng: &mut ChaCha8Rng) -> ContextSet {
    let mut supports: Vec<Support> = set.contexts.iter().map(|c| c.support.clone()).collect();
    let n = supports.len();
    let original = supports.clone();
    supports.shuffle(rng);
    if n > 1 && supports == original {
        supports.rotate_left(1);
    }
    let mut out = set.clone();
    for (ctx, support) in out.contexts.iter_mut().zip(supports) {
        let by = rng.random_range(4..=20);
        ctx.support = match support {
            Support::Hours { intervals } => {
                Support::Hours { intervals: intervals.into_iter().map(|iv| shift_interval(iv, by)).collect() }
            }
            other => other,
        };
    }
    out
}

pub fn make_context_variants(base: &ContextSets, variant: ContextVariant, seed: u64) -> ContextSets {
    match variant {
        ContextVariant::Expert => base.clone(),
        ContextVariant::Nc => ContextSets {
            setpoint: base.setpoint.with_certainty(0.0),
            season: base.season.with_certainty(0.0),
            hot_water: base.hot_water.with_certainty(0.0),
        },
        ContextVariant::Wc => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            ContextSets {
                setpoint: scramble(&base.setpoint, &mut rng),
                season: scramble(&base.season, &mut rng),
                hot_water: scramble(&base.hot_water, &mut rng),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contexts::weights_from_parts;
    use crate::data::DayType;

    #[test]
    fn nc_weights_are_all_one() {
        let nc = make_context_variants(&ContextSets::default(), ContextVariant::Nc, 0);
        let hours: Vec<u32> = (0..48).map(|k| k % 24).collect();
        let days = vec![DayType::Weekday; 48];
        let season: Vec<f64> = (0..48).map(|k| k as f64 - 10.0).collect();
        for set in [&nc.setpoint, &nc.season, &nc.hot_water] {
            let w = weights_from_parts(set, &hours, &days, &season);
            assert!(w.data.iter().all(|&v| v == 1.0));
        }
    }

    #[test]
    fn expert_is_identity() {
        let base = ContextSets::default();
        assert_eq!(make_context_variants(&base, ContextVariant::Expert, 9), base);
    }

    #[test]
    fn wc_is_seeded_valid_and_different() {
        let base = ContextSets::default();
        for seed in 0..20 {
            let a = make_context_variants(&base, ContextVariant::Wc, seed);
            assert_eq!(a, make_context_variants(&base, ContextVariant::Wc, seed));
            a.validate().unwrap();
            assert_ne!(a.setpoint, base.setpoint);
            assert_ne!(a.season, base.season);
            assert_ne!(a.hot_water, base.hot_water);
            assert_eq!(a.setpoint.names(), base.setpoint.names());
        }
    }

    #[test]
    fn variant_names() {
        for v in ContextVariant::ALL {
            assert_eq!(v.as_str().parse::<ContextVariant>().unwrap(), v);
        }
    }
}
