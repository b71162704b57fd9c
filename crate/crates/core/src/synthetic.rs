//! Seeded generator of chorale-like corpora for tests and demos.
//!
//! Records are grouped into families. A family fixes a mode, a six-chord
//! opening and a preference ordering over the chords of each harmonic
//! function; its records copy the opening with occasional substitutions and
//! continue with a tonic → predominant → dominant Markov walk that ends on a
//! cadence formula.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{ChoraleRecord, Corpus, Mode};
use crate::error::{Error, Result};

const MAJOR_TONIC: &[&str] = &["I", "I6", "vi", "iii6", "I64"];
const MAJOR_PRE: &[&str] = &["IV", "IV6", "ii", "ii65", "ii7", "ii6"];
const MAJOR_DOM: &[&str] = &["V", "V7", "V6", "V65", "viio6", "V42"];
const MINOR_TONIC: &[&str] = &["i", "i6", "VI", "III", "i64"];
const MINOR_PRE: &[&str] = &["iv", "iv6", "iio6", "iiø65", "iv7"];
const MINOR_DOM: &[&str] = &["V", "V7", "V6", "viio7", "V65", "V42"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Function {
    Tonic,
    Pre,
    Dominant,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticConfig {
    pub records: usize,
    pub families: usize,
    pub major_fraction: f64,
    /// Per-chord probability that a record departs from its family opening.
    pub mutation: f64,
    pub min_len: usize,
    pub max_len: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            records: 383,
            families: 8,
            major_fraction: 0.6,
            mutation: 0.2,
            min_len: 24,
            max_len: 48,
            seed: 42,
        }
    }
}

struct Family {
    mode: Mode,
    tonic: Vec<&'static str>,
    pre: Vec<&'static str>,
    dom: Vec<&'static str>,
    opening: Vec<&'static str>,
}

impl Family {
    fn new<R: Rng>(mode: Mode, rng: &mut R) -> Self {
        let (t, p, d) = match mode {
            Mode::Major => (MAJOR_TONIC, MAJOR_PRE, MAJOR_DOM),
            Mode::Minor => (MINOR_TONIC, MINOR_PRE, MINOR_DOM),
        };
        let mut shuffled = |set: &[&'static str]| {
            let mut v = set.to_vec();
            v.shuffle(rng);
            v
        };
        let mut fam = Family {
            mode,
            tonic: shuffled(t),
            pre: shuffled(p),
            dom: shuffled(d),
            opening: Vec::new(),
        };
        // Openings always start on the root-position tonic.
        let root = t[0];
        let mut opening = vec![root];
        let mut f = Function::Tonic;
        while opening.len() < 6 {
            f = next_function(f, rng);
            opening.push(fam.pick(f, rng));
        }
        fam.opening = opening;
        fam
    }

    /// Preference-weighted choice: the k-th preferred chord has weight 1/(k+1)².
    fn pick<R: Rng>(&self, f: Function, rng: &mut R) -> &'static str {
        let set = match f {
            Function::Tonic => &self.tonic,
            Function::Pre => &self.pre,
            Function::Dominant => &self.dom,
        };
        let weights: Vec<f64> = (0..set.len()).map(|k| 1.0 / ((k + 1) * (k + 1)) as f64).collect();
        let total: f64 = weights.iter().sum();
        let mut r = rng.random::<f64>() * total;
        for (chord, w) in set.iter().zip(weights) {
            if r < w {
                return chord;
            }
            r -= w;
        }
        set[set.len() - 1]
    }

    fn function_of(&self, chord: &str) -> Function {
        if self.tonic.contains(&chord) {
            Function::Tonic
        } else if self.pre.contains(&chord) {
            Function::Pre
        } else {
            Function::Dominant
        }
    }
}

fn next_function<R: Rng>(f: Function, rng: &mut R) -> Function {
    let r: f64 = rng.random();
    match f {
        Function::Tonic if r < 0.5 => Function::Pre,
        Function::Tonic if r < 0.8 => Function::Dominant,
        Function::Tonic => Function::Tonic,
        Function::Pre if r < 0.7 => Function::Dominant,
        Function::Pre => Function::Pre,
        Function::Dominant if r < 0.75 => Function::Tonic,
        Function::Dominant => Function::Dominant,
    }
}

/// Generates a corpus; ids are `SYN001`, `SYN002`, ...
pub fn generate_corpus(cfg: &SyntheticConfig) -> Result<Corpus> {
    if cfg.records < 1 || cfg.families < 1 {
        return Err(Error::InvalidParameter("need at least one record and one family".into()));
    }
    if !(0.0..=1.0).contains(&cfg.major_fraction) || !(0.0..=1.0).contains(&cfg.mutation) {
        return Err(Error::InvalidParameter("fractions must lie in [0, 1]".into()));
    }
    if cfg.min_len < 12 || cfg.max_len < cfg.min_len {
        return Err(Error::InvalidParameter("need 12 <= min_len <= max_len".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let major_families = (cfg.families as f64 * cfg.major_fraction).round() as usize;
    let families: Vec<Family> = (0..cfg.families)
        .map(|i| {
            let mode = if i < major_families { Mode::Major } else { Mode::Minor };
            Family::new(mode, &mut rng)
        })
        .collect();

    let mut records = Vec::with_capacity(cfg.records);
    for r in 0..cfg.records {
        // Round-robin keeps the family sizes (and so the mode split) even.
        let fam = &families[r % cfg.families];
        let len = rng.random_range(cfg.min_len..=cfg.max_len);
        let mut chords: Vec<&str> = Vec::with_capacity(len);
        for &c in &fam.opening {
            if rng.random::<f64>() < cfg.mutation {
                chords.push(fam.pick(fam.function_of(c), &mut rng));
            } else {
                chords.push(c);
            }
        }
        let mut f = fam.function_of(chords[chords.len() - 1]);
        let body = len - 6;
        while chords.len() < body {
            f = next_function(f, &mut rng);
            chords.push(fam.pick(f, &mut rng));
        }
        let cadence = [
            fam.pick(Function::Tonic, &mut rng),
            fam.pick(Function::Pre, &mut rng),
            fam.pick(Function::Pre, &mut rng),
            fam.pick(Function::Dominant, &mut rng),
            *[fam.dom[0], "V7"].choose(&mut rng).expect("non-empty"),
            match fam.mode {
                Mode::Major => "I",
                Mode::Minor => *["i", "I"].choose(&mut rng).expect("non-empty"),
            },
        ];
        chords.extend(cadence);
        records.push(ChoraleRecord {
            id: format!("SYN{:03}", r + 1),
            mode: fam.mode,
            chords: chords.iter().map(|s| s.to_string()).collect(),
            cadence: cadence.iter().map(|s| s.to_string()).collect(),
        });
    }
    Corpus::from_records(records)
}
