//! Score files.
//!
//! Two layouts are accepted, told apart by the header:
//!
//! ```text
//! stimulus_id,rater_id,score      one score per row; rater_id may be empty
//! stimulus_id,n1,n2,...,nM        one stimulus per row with its counts
//! ```

use std::collections::{HashMap, HashSet};
use std::path::Path;

use gsd_core::matrix::{Rating, RatingMatrix};
use gsd_core::CountSample;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InputError {
    #[error("cannot read {path}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: malformed CSV")]
    Csv { line: u64, source: csv::Error },
    #[error("unrecognised header `{0}`; expected `stimulus_id,rater_id,score` or `stimulus_id,n1,...,nM`")]
    Header(String),
    #[error("file has {found} categories but the scale is M = {m}")]
    ScaleMismatch { found: u32, m: u32 },
    #[error("line {line}: score `{value}` is not an integer in 1..={m}")]
    Score { line: u64, value: String, m: u32 },
    #[error("line {line}: count `{value}` is not a nonnegative integer")]
    Count { line: u64, value: String },
    #[error("line {line}: empty stimulus_id")]
    MissingStimulus { line: u64 },
    #[error("line {line}: stimulus `{id}` appears twice")]
    DuplicateStimulus { line: u64, id: String },
    #[error("stimulus `{0}` has no scores")]
    EmptyStimulus(String),
    #[error("line {line}: missing rater_id, needed for the rater/stimulus model")]
    MissingRater { line: u64 },
    #[error("line {line}: rater `{rater}` already scored stimulus `{stimulus}`")]
    DuplicateRating {
        line: u64,
        rater: String,
        stimulus: String,
    },
    #[error("line {line}: `{value}` is not a p-value in [0, 1]")]
    PValue { line: u64, value: String },
    #[error("no data rows")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct LongRow {
    line: u64,
    stimulus: usize,
    rater: Option<String>,
    score: u32,
}

/// Parsed scores, stimuli in order of first appearance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScoreData {
    m: u32,
    stimuli: Vec<(String, CountSample)>,
    rows: Vec<LongRow>,
}

/// Rater/stimulus matrix with the original identifiers of its indices.
#[derive(Debug, Clone)]
pub struct LabelledMatrix {
    pub matrix: RatingMatrix,
    pub raters: Vec<String>,
    pub stimuli: Vec<String>,
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

impl ScoreData {
    pub fn read(path: &Path, m: u32) -> Result<Self, InputError> {
        let text = std::fs::read_to_string(path).map_err(|source| InputError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text, m)
    }

    pub fn parse(text: &str, m: u32) -> Result<Self, InputError> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header = reader
            .headers()
            .map_err(|source| InputError::Csv { line: 1, source })?
            .clone();
        let names: Vec<&str> = header.iter().collect();
        let data = if names == ["stimulus_id", "rater_id", "score"] {
            Self::parse_long(&mut reader, m)?
        } else if names.len() >= 4
            && names[0] == "stimulus_id"
            && names[1..]
                .iter()
                .enumerate()
                .all(|(i, n)| *n == format!("n{}", i + 1))
        {
            let found = (names.len() - 1) as u32;
            if found != m {
                return Err(InputError::ScaleMismatch { found, m });
            }
            Self::parse_aggregate(&mut reader, m)?
        } else {
            return Err(InputError::Header(names.join(",")));
        };
        if data.stimuli.is_empty() {
            return Err(InputError::Empty);
        }
        Ok(data)
    }

    fn parse_long(reader: &mut csv::Reader<&[u8]>, m: u32) -> Result<Self, InputError> {
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut names = Vec::new();
        let mut counts: Vec<Vec<u64>> = Vec::new();
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|source| {
                let line = source.position().map_or(0, |p| p.line());
                InputError::Csv { line, source }
            })?;
            let line = line_of(&record);
            let id = &record[0];
            if id.is_empty() {
                return Err(InputError::MissingStimulus { line });
            }
            let score = record[2]
                .parse::<u32>()
                .ok()
                .filter(|s| (1..=m).contains(s))
                .ok_or_else(|| InputError::Score {
                    line,
                    value: record[2].to_string(),
                    m,
                })?;
            let stimulus = *index.entry(id.to_string()).or_insert_with(|| {
                names.push(id.to_string());
                counts.push(vec![0; m as usize]);
                names.len() - 1
            });
            counts[stimulus][score as usize - 1] += 1;
            let rater = (!record[1].is_empty()).then(|| record[1].to_string());
            rows.push(LongRow {
                line,
                stimulus,
                rater,
                score,
            });
        }
        let stimuli = names
            .into_iter()
            .zip(counts)
            .map(|(name, c)| {
                (
                    name,
                    CountSample::new(c).expect("every listed stimulus has a score"),
                )
            })
            .collect();
        Ok(Self { m, stimuli, rows })
    }

    fn parse_aggregate(reader: &mut csv::Reader<&[u8]>, m: u32) -> Result<Self, InputError> {
        let mut stimuli: Vec<(String, CountSample)> = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|source| {
                let line = source.position().map_or(0, |p| p.line());
                InputError::Csv { line, source }
            })?;
            let line = line_of(&record);
            let id = record[0].to_string();
            if id.is_empty() {
                return Err(InputError::MissingStimulus { line });
            }
            if stimuli.iter().any(|(name, _)| *name == id) {
                return Err(InputError::DuplicateStimulus { line, id });
            }
            let counts = record
                .iter()
                .skip(1)
                .map(|v| {
                    v.parse::<u64>().map_err(|_| InputError::Count {
                        line,
                        value: v.to_string(),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            let sample =
                CountSample::new(counts).map_err(|_| InputError::EmptyStimulus(id.clone()))?;
            stimuli.push((id, sample));
        }
        Ok(Self {
            m,
            stimuli,
            rows: Vec::new(),
        })
    }

    pub fn stimuli(&self) -> &[(String, CountSample)] {
        &self.stimuli
    }

    /// Needs the long layout with every rater_id present; raters and
    /// stimuli are indexed in order of first appearance.
    pub fn rating_matrix(&self) -> Result<LabelledMatrix, InputError> {
        if self.rows.is_empty() {
            return Err(InputError::MissingRater { line: 2 });
        }
        let mut rater_index: HashMap<&str, usize> = HashMap::new();
        let mut raters = Vec::new();
        let mut seen = HashSet::new();
        let mut ratings = Vec::with_capacity(self.rows.len());
        for row in &self.rows {
            let id = row
                .rater
                .as_deref()
                .ok_or(InputError::MissingRater { line: row.line })?;
            let rater = *rater_index.entry(id).or_insert_with(|| {
                raters.push(id.to_string());
                raters.len() - 1
            });
            if !seen.insert((rater, row.stimulus)) {
                return Err(InputError::DuplicateRating {
                    line: row.line,
                    rater: id.to_string(),
                    stimulus: self.stimuli[row.stimulus].0.clone(),
                });
            }
            ratings.push(Rating {
                rater,
                stimulus: row.stimulus,
                score: row.score,
            });
        }
        let stimuli: Vec<String> = self.stimuli.iter().map(|(name, _)| name.clone()).collect();
        let matrix = RatingMatrix::new(self.m, raters.len(), stimuli.len(), ratings)
            .expect("indices and scores validated while parsing");
        Ok(LabelledMatrix {
            matrix,
            raters,
            stimuli,
        })
    }
}

/// P-values from a CSV file with a `p_value` column.
pub fn read_p_values(path: &Path) -> Result<Vec<f64>, InputError> {
    let text = std::fs::read_to_string(path).map_err(|source| InputError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|source| InputError::Csv { line: 1, source })?
        .clone();
    let column = header
        .iter()
        .position(|h| h == "p_value")
        .ok_or_else(|| InputError::Header(header.iter().collect::<Vec<_>>().join(",")))?;
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|source| {
            let line = source.position().map_or(0, |p| p.line());
            InputError::Csv { line, source }
        })?;
        let line = line_of(&record);
        let raw = record.get(column).unwrap_or("");
        let p = raw
            .parse::<f64>()
            .ok()
            .filter(|p| (0.0..=1.0).contains(p))
            .ok_or_else(|| InputError::PValue {
                line,
                value: raw.to_string(),
            })?;
        values.push(p);
    }
    if values.is_empty() {
        return Err(InputError::Empty);
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn long_layout() {
        let data = ScoreData::parse("stimulus_id,rater_id,score\na,,3\na,,3\na,,3\n", 5).unwrap();
        assert_eq!(data.stimuli()[0].0, "a");
        assert_eq!(data.stimuli()[0].1.counts(), &[0, 0, 3, 0, 0]);
        assert!(data.rating_matrix().is_err());
    }

    #[test]
    fn aggregate_layout() {
        let data = ScoreData::parse("stimulus_id,n1,n2,n3,n4,n5\na,2,14,6,1,1\n", 5).unwrap();
        assert_eq!(data.stimuli()[0].1.counts(), &[2, 14, 6, 1, 1]);
    }

    #[test]
    fn out_of_scale_score_names_line() {
        let err = ScoreData::parse("stimulus_id,rater_id,score\na,r1,3\na,r2,6\n", 5).unwrap_err();
        assert!(matches!(err, InputError::Score { line: 3, .. }), "{err}");
        assert!(err.to_string().starts_with("line 3"));
    }

    #[test]
    fn scale_must_match_header() {
        let err = ScoreData::parse("stimulus_id,n1,n2,n3\na,1,2,3\n", 5).unwrap_err();
        assert!(matches!(err, InputError::ScaleMismatch { found: 3, m: 5 }));
    }

    #[test]
    fn matrix_indices_follow_first_appearance() {
        let text = "stimulus_id,rater_id,score\ns2,bob,4\ns1,bob,2\ns2,amy,5\ns1,amy,1\n";
        let labelled = ScoreData::parse(text, 5).unwrap().rating_matrix().unwrap();
        assert_eq!(labelled.raters, ["bob", "amy"]);
        assert_eq!(labelled.stimuli, ["s2", "s1"]);
        assert_eq!(labelled.matrix.get(1, 0), Some(5));
    }

    #[test]
    fn duplicate_rating_rejected() {
        let text = "stimulus_id,rater_id,score\ns,r,4\ns,r,2\n";
        let err = ScoreData::parse(text, 5)
            .unwrap()
            .rating_matrix()
            .unwrap_err();
        assert!(matches!(err, InputError::DuplicateRating { line: 3, .. }));
    }

    #[test]
    fn bad_rows() {
        assert!(matches!(
            ScoreData::parse("x,y\n1,2\n", 5),
            Err(InputError::Header(_))
        ));
        assert!(matches!(
            ScoreData::parse("stimulus_id,rater_id,score\n", 5),
            Err(InputError::Empty)
        ));
        assert!(matches!(
            ScoreData::parse("stimulus_id,n1,n2,n3\na,1,-2,3\n", 3),
            Err(InputError::Count { line: 2, .. })
        ));
        assert!(matches!(
            ScoreData::parse("stimulus_id,n1,n2,n3\na,1,2,3\na,1,1,1\n", 3),
            Err(InputError::DuplicateStimulus { line: 3, .. })
        ));
        assert!(matches!(
            ScoreData::parse("stimulus_id,rater_id,score\na,r\n", 5),
            Err(InputError::Csv { line: 2, .. })
        ));
    }
}
