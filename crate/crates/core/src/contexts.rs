//! Expert knowledge as α-certain possibility distributions.
//!
//! A context is certain to degree `α` on its support: samples inside the
//! support get weight 1, samples outside get `1 - α`.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, DayType};
use crate::error::{Error, Result};

/// Half-open hour interval `[start, end)`; wraps past midnight when `start > end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HourInterval {
    pub start: u32,
    pub end: u32,
}

impl HourInterval {
    pub fn new(start: u32, end: u32) -> Self {
        Self { start, end }
    }

    pub fn contains(&self, hour: u32) -> bool {
        if self.start <= self.end {
            hour >= self.start && hour < self.end
        } else {
            hour >= self.start || hour < self.end
        }
    }

    fn is_valid(&self) -> bool {
        self.start < 24 && self.end <= 24 && self.start != self.end
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Support {
    /// Union of hour-of-day intervals.
    Hours { intervals: Vec<HourInterval> },
    /// Season index strictly above the threshold.
    SeasonAbove { threshold: f64 },
    /// Season index strictly below the threshold.
    SeasonBelow { threshold: f64 },
}

impl Support {
    pub fn hours(intervals: &[(u32, u32)]) -> Self {
        Support::Hours { intervals: intervals.iter().map(|&(s, e)| HourInterval::new(s, e)).collect() }
    }

    /// A NaN season index is never inside a season support.
    pub fn contains(&self, hour: u32, season: f64) -> bool {
        match self {
            Support::Hours { intervals } => intervals.iter().any(|i| i.contains(hour)),
            Support::SeasonAbove { threshold } => season > *threshold,
            Support::SeasonBelow { threshold } => season < *threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PossibilityContext {
    pub name: String,
    pub support: Support,
    /// Certainty `α ∈ [0, 1]`.
    pub certainty: f64,
}

impl PossibilityContext {
    pub fn new(name: impl Into<String>, support: Support, certainty: f64) -> Self {
        Self { name: name.into(), support, certainty }
    }
}

/// `1` inside the support, `1 - α` outside. Day type does not alter supports.
pub fn possibility_weight(ctx: &PossibilityContext, hour: u32, _day: DayType, season: f64) -> f64 {
    if ctx.support.contains(hour, season) {
        1.0
    } else {
        1.0 - ctx.certainty
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextElement {
    Setpoint,
    Season,
    HotWater,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextSet {
    pub element: ContextElement,
    pub contexts: Vec<PossibilityContext>,
}

impl ContextSet {
    pub fn new(element: ContextElement, contexts: Vec<PossibilityContext>) -> Result<Self> {
        let set = Self { element, contexts };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(format!("{:?} contexts: {m}", self.element)));
        if self.contexts.is_empty() {
            return bad("at least one context required".into());
        }
        for (i, c) in self.contexts.iter().enumerate() {
            if !(0.0..=1.0).contains(&c.certainty) {
                return bad(format!("certainty of `{}` outside [0, 1]", c.name));
            }
            if self.contexts[..i].iter().any(|o| o.name == c.name) {
                return bad(format!("duplicate name `{}`", c.name));
            }
            if let Support::Hours { intervals } = &c.support {
                if intervals.iter().any(|iv| !iv.is_valid()) {
                    return bad(format!("invalid hour interval in `{}`", c.name));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.contexts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contexts.is_empty()
    }

    pub fn names(&self) -> Vec<&str> {
        self.contexts.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn with_certainty(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.contexts.iter_mut().for_each(|c| c.certainty = alpha);
        out
    }
}

/// The three context sets used by the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextSets {
    pub setpoint: ContextSet,
    pub season: ContextSet,
    pub hot_water: ContextSet,
}

impl ContextSets {
    pub fn defaults(certainty: f64) -> Self {
        Self {
            setpoint: default_contexts(ContextElement::Setpoint, certainty),
            season: default_contexts(ContextElement::Season, certainty),
            hot_water: default_contexts(ContextElement::HotWater, certainty),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.setpoint.validate()?;
        self.season.validate()?;
        self.hot_water.validate()
    }
}

impl Default for ContextSets {
    fn default() -> Self {
        Self::defaults(DEFAULT_CERTAINTY)
    }
}

pub const DEFAULT_CERTAINTY: f64 = 0.9;

/// Expert contexts for a model element. Order matters: it fixes which
/// prior applies to which context.
pub fn default_contexts(element: ContextElement, certainty: f64) -> ContextSet {
    let ctx = PossibilityContext::new;
    let contexts = match element {
        ContextElement::Setpoint => vec![
            ctx("setback", Support::hours(&[(22, 6), (9, 18)]), certainty),
            ctx("comfort", Support::hours(&[(4, 10), (16, 24)]), certainty),
        ],
        ContextElement::Season => vec![
            ctx("hot", Support::SeasonAbove { threshold: 10.0 }, certainty),
            ctx("cold", Support::SeasonBelow { threshold: 10.0 }, certainty),
        ],
        ContextElement::HotWater => vec![
            ctx("night", Support::hours(&[(22, 6)]), certainty),
            ctx("waking-up", Support::hours(&[(4, 10)]), certainty),
            ctx("working-hours", Support::hours(&[(9, 18)]), certainty),
            ctx("after-work", Support::hours(&[(16, 24)]), certainty),
        ],
    };
    ContextSet { element, contexts }
}

/// Row-major `rows × cols` matrix of possibility weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl WeightMatrix {
    pub fn row(&self, k: usize) -> &[f64] {
        &self.data[k * self.cols..(k + 1) * self.cols]
    }

    pub fn get(&self, k: usize, c: usize) -> f64 {
        self.data[k * self.cols + c]
    }

    /// Rows on which every context has weight zero.
    pub fn zero_rows(&self) -> usize {
        (0..self.rows).filter(|&k| self.row(k).iter().all(|&w| w == 0.0)).count()
    }

    pub fn ones(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![1.0; rows * cols] }
    }
}

pub(crate) fn weights_from_parts(set: &ContextSet, hours: &[u32], days: &[DayType], season: &[f64]) -> WeightMatrix {
    let rows = hours.len();
    let cols = set.len();
    let mut data = Vec::with_capacity(rows * cols);
    for k in 0..rows {
        for c in &set.contexts {
            data.push(possibility_weight(c, hours[k], days[k], season[k]));
        }
    }
    WeightMatrix { rows, cols, data }
}

/// Per-row, per-context weights. `season` holds the season index per row
/// (NaN where it is not yet defined).
pub fn weight_matrix(set: &ContextSet, ds: &Dataset, season: &[f64]) -> Result<WeightMatrix> {
    if season.len() != ds.len() {
        return Err(Error::AlignmentMismatch { expected: ds.len(), found: season.len() });
    }
    let hours: Vec<u32> = ds.records().iter().map(|r| r.calendar.hour).collect();
    let days: Vec<DayType> = ds.records().iter().map(|r| r.calendar.day_type).collect();
    Ok(weights_from_parts(set, &hours, &days, season))
}

/// Weight matrices for all three elements, aligned with the same rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextWeights {
    pub setpoint: WeightMatrix,
    pub season: WeightMatrix,
    pub hot_water: WeightMatrix,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const WD: DayType = DayType::Weekday;

    #[test]
    fn certainty_extremes() {
        let ctx = PossibilityContext::new("c", Support::hours(&[(4, 10)]), 1.0);
        assert_eq!(possibility_weight(&ctx, 5, WD, f64::NAN), 1.0);
        assert_eq!(possibility_weight(&ctx, 12, WD, f64::NAN), 0.0);
        let ignorant = PossibilityContext { certainty: 0.0, ..ctx.clone() };
        for h in 0..24 {
            assert_eq!(possibility_weight(&ignorant, h, WD, 3.0), 1.0);
        }
        let partial = PossibilityContext { certainty: 0.8, ..ctx };
        assert_eq!(possibility_weight(&partial, 7, WD, 0.0), 1.0);
        assert!((possibility_weight(&partial, 13, WD, 0.0) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn wraparound_interval() {
        let iv = HourInterval::new(22, 6);
        let inside: Vec<u32> = (0..24).filter(|&h| iv.contains(h)).collect();
        assert_eq!(inside, vec![0, 1, 2, 3, 4, 5, 22, 23]);
    }

    #[test]
    fn default_setpoint_overlap_and_coverage() {
        let set = default_contexts(ContextElement::Setpoint, 0.9);
        assert_eq!(set.names(), vec!["setback", "comfort"]);
        let both: Vec<u32> =
            (0..24).filter(|&h| set.contexts.iter().all(|c| c.support.contains(h, f64::NAN))).collect();
        assert_eq!(both, vec![4, 5, 9, 16, 17, 22, 23]);
        assert!((0..24).all(|h| set.contexts.iter().any(|c| c.support.contains(h, f64::NAN))));
    }

    #[test]
    fn default_season_and_hot_water() {
        let season = default_contexts(ContextElement::Season, 0.9);
        assert_eq!(season.contexts[0].support, Support::SeasonAbove { threshold: 10.0 });
        assert_eq!(season.contexts[1].support, Support::SeasonBelow { threshold: 10.0 });
        let hw = default_contexts(ContextElement::HotWater, 0.9);
        assert_eq!(hw.len(), 4);
        assert_eq!(hw.contexts[0].name, "night");
        assert_eq!(hw.contexts[0].support, Support::hours(&[(22, 6)]));
    }

    #[test]
    fn hand_built_table_for_one_day() {
        // Setpoint contexts, α = 0.9, hours 0..24 enumerated by hand.
        let set = default_contexts(ContextElement::Setpoint, 0.9);
        let hours: Vec<u32> = (0..24).collect();
        let w = weights_from_parts(&set, &hours, &[WD; 24], &[f64::NAN; 24]);
        let lo = 1.0 - 0.9;
        #[rustfmt::skip]
        let setback = [1.,1.,1.,1.,1.,1.,lo,lo,lo,1.,1.,1.,1.,1.,1.,1.,1.,1.,lo,lo,lo,lo,1.,1.];
        #[rustfmt::skip]
        let comfort = [lo,lo,lo,lo,1.,1.,1.,1.,1.,1.,lo,lo,lo,lo,lo,lo,1.,1.,1.,1.,1.,1.,1.,1.];
        for h in 0..24 {
            assert_eq!(w.get(h, 0), setback[h], "setback h={h}");
            assert_eq!(w.get(h, 1), comfort[h], "comfort h={h}");
        }
        assert_eq!(w.zero_rows(), 0);
    }

    #[test]
    fn zero_rows_when_supports_do_not_cover() {
        let set = ContextSet::new(
            ContextElement::HotWater,
            vec![
                PossibilityContext::new("a", Support::hours(&[(0, 6)]), 1.0),
                PossibilityContext::new("b", Support::hours(&[(6, 12)]), 1.0),
            ],
        )
        .unwrap();
        let hours: Vec<u32> = (0..24).collect();
        let w = weights_from_parts(&set, &hours, &[WD; 24], &[0.0; 24]);
        assert_eq!(w.zero_rows(), 12);
        let all_ignorant = set.with_certainty(0.0);
        let w = weights_from_parts(&all_ignorant, &hours, &[WD; 24], &[0.0; 24]);
        assert!(w.data.iter().all(|&x| x == 1.0));
    }

    #[test]
    fn rejects_duplicate_names_and_bad_alpha() {
        let c = PossibilityContext::new("x", Support::hours(&[(1, 2)]), 0.5);
        assert!(ContextSet::new(ContextElement::Setpoint, vec![c.clone(), c.clone()]).is_err());
        let bad = PossibilityContext { certainty: 1.5, ..c };
        assert!(ContextSet::new(ContextElement::Setpoint, vec![bad]).is_err());
    }

    proptest! {
        #[test]
        fn weight_is_one_or_complement(alpha in 0.0f64..=1.0, h in 0u32..24, s in -10.0f64..30.0) {
            for set in ContextSets::defaults(alpha).setpoint.contexts.iter()
                .chain(ContextSets::defaults(alpha).season.contexts.iter()) {
                let w = possibility_weight(set, h, WD, s);
                prop_assert!(w == 1.0 || w == 1.0 - alpha);
            }
        }

        #[test]
        fn raising_alpha_never_raises_weights(a in 0.0f64..=1.0, b in 0.0f64..=1.0, h in 0u32..24) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let wl = default_contexts(ContextElement::HotWater, lo);
            let wh = default_contexts(ContextElement::HotWater, hi);
            for (cl, ch) in wl.contexts.iter().zip(&wh.contexts) {
                prop_assert!(possibility_weight(ch, h, WD, 0.0) <= possibility_weight(cl, h, WD, 0.0));
            }
        }
    }
}
