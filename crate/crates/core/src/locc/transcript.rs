use std::fmt::Write as _;

use super::operation::{OperationKind, Party};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    Operation {
        party: Party,
        kind: OperationKind,
        label: String,
        outcome: usize,
        probability: f64,
    },
    Message {
        from: Party,
        bits: Vec<bool>,
    },
}

/// Ordered record of everything the two parties did and said.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Transcript {
    events: Vec<Event>,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, event: Event) {
        self.events.push(event);
    }

    pub fn extend(&mut self, other: Transcript) {
        self.events.extend(other.events);
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Measurement outcomes in order, messages skipped.
    pub fn outcomes(&self) -> Vec<usize> {
        self.events
            .iter()
            .filter_map(|e| match e {
                Event::Operation { outcome, .. } => Some(*outcome),
                Event::Message { .. } => None,
            })
            .collect()
    }

    pub fn classical_bits(&self) -> usize {
        self.events
            .iter()
            .map(|e| match e {
                Event::Message { bits, .. } => bits.len(),
                Event::Operation { .. } => 0,
            })
            .sum()
    }

    /// One tab-separated line per event: `step party op outcome probability`.
    ///
    /// Operations are written as `kind:label`; messages as `message` with the
    /// bit string in the outcome column and `-` for the probability.
    /// Probabilities use shortest round-trip formatting so a parsed log is
    /// bit-identical to the original.
    pub fn to_log(&self) -> String {
        let mut out = String::new();
        for (step, e) in self.events.iter().enumerate() {
            match e {
                Event::Operation {
                    party,
                    kind,
                    label,
                    outcome,
                    probability,
                } => {
                    let _ = writeln!(
                        out,
                        "{step}\t{party}\t{}:{label}\t{outcome}\t{probability:?}",
                        kind.name()
                    );
                }
                Event::Message { from, bits } => {
                    let s: String = bits.iter().map(|&b| if b { '1' } else { '0' }).collect();
                    let s = if s.is_empty() { "_".to_string() } else { s };
                    let _ = writeln!(out, "{step}\t{from}\tmessage\t{s}\t-");
                }
            }
        }
        out
    }

    pub fn parse_log(text: &str) -> Result<Self> {
        let mut t = Transcript::new();
        for (idx, line) in text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
        {
            let bad = |reason: &str| Error::MalformedTranscript {
                line: idx + 1,
                reason: reason.to_string(),
            };
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 5 {
                return Err(bad("expected 5 tab-separated columns"));
            }
            if cols[0].parse::<usize>().ok() != Some(t.len()) {
                return Err(bad("step index out of sequence"));
            }
            let party = Party::parse(cols[1]).ok_or_else(|| bad("unknown party"))?;
            if cols[2] == "message" {
                let bits = match cols[3] {
                    "_" => Vec::new(),
                    s => s
                        .chars()
                        .map(|ch| match ch {
                            '0' => Ok(false),
                            '1' => Ok(true),
                            _ => Err(bad("message bits must be 0/1")),
                        })
                        .collect::<Result<Vec<bool>>>()?,
                };
                t.push(Event::Message { from: party, bits });
            } else {
                let (kind, label) = cols[2]
                    .split_once(':')
                    .ok_or_else(|| bad("operation must be kind:label"))?;
                let kind =
                    OperationKind::parse(kind).ok_or_else(|| bad("unknown operation kind"))?;
                let outcome = cols[3]
                    .parse()
                    .map_err(|_| bad("outcome is not an integer"))?;
                let probability = cols[4]
                    .parse()
                    .map_err(|_| bad("probability is not a number"))?;
                t.push(Event::Operation {
                    party,
                    kind,
                    label: label.to_string(),
                    outcome,
                    probability,
                });
            }
        }
        Ok(t)
    }
}

/// Big-endian binary encoding of `value` in `width` bits.
pub fn bits_of(value: usize, width: usize) -> Vec<bool> {
    (0..width).rev().map(|i| (value >> i) & 1 == 1).collect()
}

/// Number of bits needed to name one of `count` alternatives.
pub fn bits_for(count: usize) -> usize {
    if count <= 1 {
        0
    } else {
        (usize::BITS - (count - 1).leading_zeros()) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_round_trip() {
        let mut t = Transcript::new();
        t.push(Event::Operation {
            party: Party::Alice,
            kind: OperationKind::Projective,
            label: "schmidt-k".into(),
            outcome: 3,
            probability: 0.1 + 0.2,
        });
        t.push(Event::Message {
            from: Party::Alice,
            bits: bits_of(3, 4),
        });
        t.push(Event::Message {
            from: Party::Bob,
            bits: vec![],
        });
        let log = t.to_log();
        assert!(log.starts_with("0\talice\tprojective:schmidt-k\t3\t0.30000000000000004\n"));
        assert!(log.contains("1\talice\tmessage\t0011\t-"));
        assert_eq!(Transcript::parse_log(&log).unwrap(), t);
        assert_eq!(t.classical_bits(), 4);
        assert_eq!(t.outcomes(), vec![3]);
    }

    #[test]
    fn parse_errors_name_the_line() {
        let err =
            Transcript::parse_log("0\talice\tmessage\t01\t-\n5\tbob\tmessage\t1\t-\n").unwrap_err();
        assert_eq!(
            err,
            Error::MalformedTranscript {
                line: 2,
                reason: "step index out of sequence".into()
            }
        );
        assert!(Transcript::parse_log("0\tcarol\tmessage\t1\t-").is_err());
        assert!(Transcript::parse_log("0\talice\tunitary\t0\t1").is_err());
    }

    #[test]
    fn bit_widths() {
        assert_eq!(bits_for(1), 0);
        assert_eq!(bits_for(2), 1);
        assert_eq!(bits_for(9), 4);
        assert_eq!(bits_for(16), 4);
        assert_eq!(bits_of(5, 3), vec![true, false, true]);
    }
}
