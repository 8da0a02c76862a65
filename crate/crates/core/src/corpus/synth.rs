//! Synthetic name-corpus generator. Real study corpora are not
//! redistributable, so tests and demos run on generated corpora whose
//! Bayes-optimal accuracy is computable in closed form from the generator
//! parameters.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{NameRecord, Task};
use crate::error::{Error, Result};

/// Follower/post count ranges for social-media-shaped corpora.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SocialParams {
    pub max_followers: u64,
    pub max_posts: u64,
    /// Epoch-second range for account creation times.
    pub created_range: (i64, i64),
}

/// Generator parameters. Names are built as a given-name part plus a
/// surname; the class signal is a marker suffix appended to the given part
/// with class-dependent probability, and optionally class-specific given
/// inventories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub task: Task,
    /// P(class 0), P(class 1); must sum to 1.
    pub class_priors: [f64; 2],
    /// Given-name inventories per class. Identical lists mean the marker is
    /// the only class signal.
    pub given_stems: [Vec<String>; 2],
    pub surnames: Vec<String>,
    /// Suffix appended to the given part when the marker coin comes up.
    pub marker_suffix: String,
    /// P(marker | class) for each class.
    pub marker_prob: [f64; 2],
    /// When true the base word order is "SURNAME GIVEN".
    #[serde(default)]
    pub given_last: bool,
    /// Probability of swapping the two words (convention variance).
    #[serde(default)]
    pub flip_prob: f64,
    pub year_range: (i32, i32),
    /// Optional state mixture (code, weight). Weights are normalized.
    #[serde(default)]
    pub states: Vec<(String, f64)>,
    #[serde(default)]
    pub social: Option<SocialParams>,
    pub count: usize,
}

/// A generated corpus together with the Bayes-optimal accuracy of the
/// generating model.
#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub records: Vec<NameRecord>,
    pub bayes_accuracy: f64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let check_prob = |p: f64, what: &str| -> Result<()> {
            if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                return Err(Error::InvalidParam(format!(
                    "{what} must be a probability in [0, 1], got {p}"
                )));
            }
            Ok(())
        };
        check_prob(self.class_priors[0], "class prior 0")?;
        check_prob(self.class_priors[1], "class prior 1")?;
        if (self.class_priors[0] + self.class_priors[1] - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParam("class priors must sum to 1".into()));
        }
        check_prob(self.marker_prob[0], "marker probability 0")?;
        check_prob(self.marker_prob[1], "marker probability 1")?;
        check_prob(self.flip_prob, "flip probability")?;
        for (k, stems) in self.given_stems.iter().enumerate() {
            if stems.is_empty() {
                return Err(Error::InvalidParam(format!(
                    "given-stem inventory for class {k} is empty"
                )));
            }
        }
        if self.surnames.is_empty() {
            return Err(Error::InvalidParam("surname inventory is empty".into()));
        }
        if self.year_range.0 > self.year_range.1 {
            return Err(Error::InvalidParam("year range is reversed".into()));
        }
        for (_, w) in &self.states {
            if *w < 0.0 || !w.is_finite() {
                return Err(Error::InvalidParam("state weights must be non-negative".into()));
            }
        }
        if !self.states.is_empty() && self.states.iter().map(|(_, w)| w).sum::<f64>() <= 0.0 {
            return Err(Error::InvalidParam("state weights sum to zero".into()));
        }
        if self.count == 0 {
            return Err(Error::InvalidParam("count must be positive".into()));
        }
        Ok(())
    }

    /// Distribution over literal given-name strings for one class,
    /// accounting for marker collisions (a stem plus the marker may equal
    /// another stem).
    fn given_distribution(&self, class: usize) -> BTreeMap<String, f64> {
        let stems = &self.given_stems[class];
        let p_marker = self.marker_prob[class];
        let per_stem = 1.0 / stems.len() as f64;
        let mut dist = BTreeMap::new();
        for stem in stems {
            if p_marker < 1.0 {
                *dist.entry(stem.clone()).or_insert(0.0) += per_stem * (1.0 - p_marker);
            }
            if p_marker > 0.0 {
                let marked = format!("{stem}{}", self.marker_suffix);
                *dist.entry(marked).or_insert(0.0) += per_stem * p_marker;
            }
        }
        dist
    }

    /// Exact Bayes-optimal accuracy of the generative model, obtained by
    /// enumerating the joint distribution of full-name strings and classes
    /// and summing, per name, the larger class mass.
    pub fn bayes_accuracy(&self) -> f64 {
        let given = [self.given_distribution(0), self.given_distribution(1)];
        let p_surname = 1.0 / self.surnames.len() as f64;
        // probability that the given part lands first in the final string
        let p_given_first = if self.given_last {
            self.flip_prob
        } else {
            1.0 - self.flip_prob
        };

        let mut joint: BTreeMap<String, [f64; 2]> = BTreeMap::new();
        for (class, class_given) in given.iter().enumerate() {
            let prior = self.class_priors[class];
            if prior == 0.0 {
                continue;
            }
            for (g, pg) in class_given {
                for s in &self.surnames {
                    let mass = prior * pg * p_surname;
                    if p_given_first > 0.0 {
                        joint.entry(format!("{g} {s}")).or_insert([0.0; 2])[class] +=
                            mass * p_given_first;
                    }
                    if p_given_first < 1.0 {
                        joint.entry(format!("{s} {g}")).or_insert([0.0; 2])[class] +=
                            mass * (1.0 - p_given_first);
                    }
                }
            }
        }
        joint.values().map(|m| m[0].max(m[1])).sum()
    }
}

/// Draws `spec.count` records deterministically from the seed and reports
/// the generator's closed-form Bayes accuracy alongside.
pub fn generate_synthetic_corpus(spec: &SyntheticSpec, seed: u64) -> Result<SyntheticCorpus> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let state_total: f64 = spec.states.iter().map(|(_, w)| w).sum();

    let mut records = Vec::with_capacity(spec.count);
    for _ in 0..spec.count {
        let class = usize::from(rng.gen::<f64>() >= spec.class_priors[0]);
        let stems = &spec.given_stems[class];
        let mut given = stems[rng.gen_range(0..stems.len())].clone();
        if rng.gen::<f64>() < spec.marker_prob[class] {
            given.push_str(&spec.marker_suffix);
        }
        let surname = &spec.surnames[rng.gen_range(0..spec.surnames.len())];

        let given_first = spec.given_last == (rng.gen::<f64>() < spec.flip_prob);
        let raw_name = if given_first {
            format!("{given} {surname}")
        } else {
            format!("{surname} {given}")
        };

        let year = rng.gen_range(spec.year_range.0..=spec.year_range.1);
        let state = if spec.states.is_empty() {
            None
        } else {
            let mut pick = rng.gen::<f64>() * state_total;
            let mut chosen = spec.states.len() - 1;
            for (i, (_, w)) in spec.states.iter().enumerate() {
                if pick < *w {
                    chosen = i;
                    break;
                }
                pick -= w;
            }
            Some(spec.states[chosen].0.clone())
        };

        let mut record = NameRecord {
            raw_name,
            year: Some(year),
            state,
            ..NameRecord::default()
        };
        if let Some(social) = &spec.social {
            record.followers = Some(rng.gen_range(0..=social.max_followers));
            record.posts = Some(rng.gen_range(0..=social.max_posts));
            record.created_at = Some(rng.gen_range(social.created_range.0..=social.created_range.1));
        }
        record.set_label(spec.task, crate::corpus::ClassId(class as u8));
        records.push(record);
    }

    Ok(SyntheticCorpus {
        records,
        bayes_accuracy: spec.bayes_accuracy(),
    })
}

/// A ready-made two-class gender spec with shared stem inventories where the
/// marker suffix is the only class signal. Stems are three syllables,
/// surnames two syllables plus a closing consonant, so no stem ends with
/// the marker and no marked form collides with an unmarked one. Used by
/// tests and demos.
pub fn marker_spec(
    marker_prob: [f64; 2],
    count: usize,
    stems: usize,
    surnames: usize,
) -> SyntheticSpec {
    const SYLLABLES: [&str; 20] = [
        "KA", "RI", "SH", "MA", "DE", "VI", "RA", "JE", "SU", "NI", "TA", "LO", "PR", "EM", "AN",
        "IL", "VO", "GU", "BH", "CH",
    ];
    // mixed-radix over the syllable alphabet: distinct word per index
    let word = |mut index: usize, syllable_count: usize| -> String {
        let mut out = String::new();
        for _ in 0..syllable_count {
            out.push_str(SYLLABLES[index % SYLLABLES.len()]);
            index /= SYLLABLES.len();
        }
        out
    };
    assert!(stems <= 8_000, "stem inventory caps at 20^3");
    assert!(surnames <= 400, "surname inventory caps at 20^2");
    let given: Vec<String> = (0..stems).map(|i| word(i, 3)).collect();
    let family: Vec<String> = (0..surnames)
        .map(|i| {
            let mut w = word(i, 2);
            w.push('R');
            w
        })
        .collect();

    SyntheticSpec {
        task: Task::Gender,
        class_priors: [0.5, 0.5],
        given_stems: [given.clone(), given],
        surnames: family,
        marker_suffix: "II".to_string(),
        marker_prob,
        given_last: true,
        flip_prob: 0.0,
        year_range: (2004, 2011),
        states: Vec::new(),
        social: None,
        count,
    }
}
