//! Bow tension rendered on a forearm slide display, plus the twelve-pattern
//! perception study: schedules and confusion-matrix aggregation.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Travel of the contact point along the forearm, mm.
pub const SLIDE_RANGE_MM: f64 = 75.0;

/// Palm separation that maps to full travel, m.
pub const FULL_STRETCH_M: f64 = 1.0;

/// Largest normal force the display can press with, N.
pub const MAX_FORCE_N: f64 = 2.0;

pub const PATTERN_COUNT: usize = 12;
pub const REPETITIONS: usize = 3;
pub const ONSET_SPACING_S: f64 = 10.0;

/// Target state of the display's contact point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactCommand {
    pub slide_mm: f64,
    pub normal_force_n: f64,
}

impl ContactCommand {
    /// Saturates both channels to what the display can render.
    pub fn new(slide_mm: f64, normal_force_n: f64) -> Self {
        Self {
            slide_mm: slide_mm.clamp(0.0, SLIDE_RANGE_MM),
            normal_force_n: normal_force_n.clamp(0.0, MAX_FORCE_N),
        }
    }

    /// Start position with no skin contact, used after the shot.
    pub fn rest() -> Self {
        Self::new(0.0, 0.0)
    }

    /// `slide_mm,force_n` line for the hardware bridge.
    pub fn to_record(&self) -> String {
        format!("{:.9},{:.9}", self.slide_mm, self.normal_force_n)
    }

    pub fn parse_record(line: &str) -> Result<Self> {
        let (a, b) = line
            .trim()
            .split_once(',')
            .ok_or_else(|| Error::Validation(format!("bad contact record `{line}`")))?;
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::Validation(format!("bad contact record `{line}`: {e}")))
        };
        Ok(Self::new(num(a)?, num(b)?))
    }
}

/// Writes one `slide_mm,force_n` record per line.
pub fn write_contact_stream<W: Write>(mut w: W, commands: &[ContactCommand]) -> Result<()> {
    for c in commands {
        writeln!(w, "{}", c.to_record())?;
    }
    Ok(())
}

/// Slide position for a palm separation, saturating at one meter.
pub fn contact_from_stretch(stretch: f64) -> f64 {
    SLIDE_RANGE_MM * (stretch.max(0.0) / FULL_STRETCH_M).min(1.0)
}

/// Live command while aiming: slide follows the stretch and the normal force
/// grows continuously with it, up to the display maximum.
pub fn gameplay_contact(stretch: f64) -> ContactCommand {
    let fraction = (stretch.max(0.0) / FULL_STRETCH_M).min(1.0);
    ContactCommand::new(contact_from_stretch(stretch), MAX_FORCE_N * fraction)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ForceLevel {
    Strong,
    Medium,
    Light,
}

impl ForceLevel {
    pub const ALL: [ForceLevel; 3] = [ForceLevel::Strong, ForceLevel::Medium, ForceLevel::Light];

    pub fn code(self) -> char {
        match self {
            ForceLevel::Strong => 'S',
            ForceLevel::Medium => 'M',
            ForceLevel::Light => 'L',
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Newtons for each study force level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForceTable {
    pub strong: f64,
    pub medium: f64,
    pub light: f64,
}

impl Default for ForceTable {
    fn default() -> Self {
        Self {
            strong: 2.0,
            medium: 1.25,
            light: 0.5,
        }
    }
}

impl ForceTable {
    pub fn force(&self, level: ForceLevel) -> f64 {
        match level {
            ForceLevel::Strong => self.strong,
            ForceLevel::Medium => self.medium,
            ForceLevel::Light => self.light,
        }
    }
}

/// One of the twelve (distance level, force level) study stimuli.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct TactilePattern {
    distance_level: u8,
    force: ForceLevel,
}

impl TactilePattern {
    pub fn new(distance_level: u8, force: ForceLevel) -> Result<Self> {
        if !(1..=4).contains(&distance_level) {
            return Err(Error::Validation(format!(
                "distance level must be 1..=4, got {distance_level}"
            )));
        }
        Ok(Self { distance_level, force })
    }

    pub fn distance_level(&self) -> u8 {
        self.distance_level
    }

    pub fn force(&self) -> ForceLevel {
        self.force
    }

    /// All patterns in table order: 1S..4S, 1M..4M, 1L..4L.
    pub fn all() -> [TactilePattern; PATTERN_COUNT] {
        std::array::from_fn(|i| TactilePattern {
            distance_level: (i % 4) as u8 + 1,
            force: ForceLevel::ALL[i / 4],
        })
    }

    pub fn index(&self) -> usize {
        self.force.index() * 4 + (self.distance_level as usize - 1)
    }
}

impl fmt::Display for TactilePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.distance_level, self.force.code())
    }
}

impl FromStr for TactilePattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Validation(format!("unknown tactile pattern `{s}`"));
        let mut chars = s.chars();
        let (Some(d), Some(f), None) = (chars.next(), chars.next(), chars.next()) else {
            return Err(bad());
        };
        let level = d.to_digit(10).ok_or_else(bad)? as u8;
        let force = match f.to_ascii_uppercase() {
            'S' => ForceLevel::Strong,
            'M' => ForceLevel::Medium,
            'L' => ForceLevel::Light,
            _ => return Err(bad()),
        };
        TactilePattern::new(level, force).map_err(|_| bad())
    }
}

impl TryFrom<String> for TactilePattern {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<TactilePattern> for String {
    fn from(p: TactilePattern) -> String {
        p.to_string()
    }
}

/// Display command for a study pattern: level `k` slides to the k-th quartile
/// of the travel, the force comes from `forces`.
pub fn pattern_command(p: TactilePattern, forces: &ForceTable) -> ContactCommand {
    ContactCommand::new(
        SLIDE_RANGE_MM * f64::from(p.distance_level) / 4.0,
        forces.force(p.force),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduledPattern {
    pub pattern: TactilePattern,
    pub onset_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySchedule {
    pub seed: u64,
    pub trials: Vec<ScheduledPattern>,
}

/// Every pattern three times in a seeded uniform shuffle, ten seconds apart.
pub fn make_schedule(seed: u64) -> StudySchedule {
    let mut order: Vec<TactilePattern> = TactilePattern::all()
        .into_iter()
        .flat_map(|p| std::iter::repeat_n(p, REPETITIONS))
        .collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let trials = order
        .into_iter()
        .enumerate()
        .map(|(k, pattern)| ScheduledPattern {
            pattern,
            onset_s: k as f64 * ONSET_SPACING_S,
        })
        .collect();
    StudySchedule { seed, trials }
}

impl StudySchedule {
    /// `trial,pattern,onset_s,slide_mm,force_n`
    pub fn write_csv<W: Write>(&self, w: W, forces: &ForceTable) -> Result<()> {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["trial", "pattern", "onset_s", "slide_mm", "force_n"])?;
        for (i, s) in self.trials.iter().enumerate() {
            let c = pattern_command(s.pattern, forces);
            w.write_record(&[
                i.to_string(),
                s.pattern.to_string(),
                s.onset_s.to_string(),
                c.slide_mm.to_string(),
                c.normal_force_n.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// One participant answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub trial: u32,
    pub presented: TactilePattern,
    pub answered: TactilePattern,
    pub timestamp: f64,
}

/// Parses a `trial,presented,answered,timestamp` log. Unknown pattern labels
/// are rejected with the offending row number.
pub fn read_responses_csv<R: Read>(r: R) -> Result<Vec<ResponseRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let mut out = Vec::new();
    for (row, rec) in rdr.deserialize::<ResponseRecord>().enumerate() {
        out.push(rec.map_err(|e| Error::Validation(format!("response row {}: {e}", row + 1)))?);
    }
    Ok(out)
}

/// Counts with row-normalized percentages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    /// `counts[real][answered]`
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    fn zeros(labels: Vec<String>) -> Self {
        let n = labels.len();
        Self {
            labels,
            counts: vec![vec![0; n]; n],
        }
    }

    pub fn row_total(&self, row: usize) -> u64 {
        self.counts[row].iter().sum()
    }

    pub fn total(&self) -> u64 {
        (0..self.labels.len()).map(|r| self.row_total(r)).sum()
    }

    /// Row-normalized percentages; empty rows stay all zero.
    pub fn percentages(&self) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .map(|row| {
                let n: u64 = row.iter().sum();
                row.iter()
                    .map(|&c| if n == 0 { 0.0 } else { 100.0 * c as f64 / n as f64 })
                    .collect()
            })
            .collect()
    }

    /// Share of answers on the diagonal, in percent.
    pub fn recognition_rate(&self) -> f64 {
        let hits: u64 = (0..self.labels.len()).map(|i| self.counts[i][i]).sum();
        let total = self.total();
        if total == 0 {
            0.0
        } else {
            100.0 * hits as f64 / total as f64
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(w);
        let mut header = vec!["real".to_string()];
        header.extend(self.labels.iter().cloned());
        header.push("n".into());
        w.write_record(&header)?;
        for (i, row) in self.percentages().iter().enumerate() {
            let mut rec = vec![self.labels[i].clone()];
            rec.extend(row.iter().map(|p| format!("{p:.1}")));
            rec.push(self.row_total(i).to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionReport {
    /// 12×12 over patterns.
    pub patterns: ConfusionMatrix,
    /// 3×3 over force levels.
    pub forces: ConfusionMatrix,
    /// 4×4 over distance levels.
    pub distances: ConfusionMatrix,
}

impl ConfusionReport {
    pub fn pattern_rate(&self) -> f64 {
        self.patterns.recognition_rate()
    }

    pub fn force_rate(&self) -> f64 {
        self.forces.recognition_rate()
    }

    pub fn distance_rate(&self) -> f64 {
        self.distances.recognition_rate()
    }
}

/// Aggregates (presented, answered) pairs into the full pattern matrix and
/// its force and distance marginals.
pub fn confusion_stats(responses: &[(TactilePattern, TactilePattern)]) -> Result<ConfusionReport> {
    if responses.is_empty() {
        return Err(Error::Validation("no responses to aggregate".into()));
    }
    let mut patterns = ConfusionMatrix::zeros(TactilePattern::all().iter().map(|p| p.to_string()).collect());
    let mut forces = ConfusionMatrix::zeros(ForceLevel::ALL.iter().map(|f| f.code().to_string()).collect());
    let mut distances = ConfusionMatrix::zeros((1..=4).map(|d| d.to_string()).collect());
    for (real, answer) in responses {
        patterns.counts[real.index()][answer.index()] += 1;
        forces.counts[real.force.index()][answer.force.index()] += 1;
        distances.counts[real.distance_level as usize - 1][answer.distance_level as usize - 1] += 1;
    }
    Ok(ConfusionReport {
        patterns,
        forces,
        distances,
    })
}
