use crate::error::{Error, Result};
use std::collections::BTreeMap;
use std::fmt::Write as _;

/// `k` sites over `n` leaves with states `0..r`, stored site-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alignment {
    n: usize,
    r: usize,
    states: Vec<u8>,
}

impl Alignment {
    pub fn from_states(n: usize, r: usize, states: Vec<u8>) -> Result<Self> {
        if n == 0 || !states.len().is_multiple_of(n) {
            return Err(Error::DimensionMismatch(format!(
                "{} states for {} leaves",
                states.len(),
                n
            )));
        }
        if states.iter().any(|&s| s as usize >= r) {
            return Err(Error::StateSpace(format!("state outside 0..{r}")));
        }
        Ok(Alignment { n, r, states })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn k(&self) -> usize {
        self.states.len() / self.n
    }

    /// States of site `j`, indexed by leaf label.
    pub fn site(&self, j: usize) -> &[u8] {
        &self.states[j * self.n..(j + 1) * self.n]
    }

    pub fn sites(&self) -> impl Iterator<Item = &[u8]> {
        self.states.chunks(self.n)
    }

    /// Distinct site patterns with multiplicities, in lexicographic order.
    pub fn pattern_counts(&self) -> BTreeMap<Vec<u8>, usize> {
        let mut m = BTreeMap::new();
        for s in self.sites() {
            *m.entry(s.to_vec()).or_insert(0) += 1;
        }
        m
    }

    /// Text form: a header `k n r`, then one site per line. Two-state sites
    /// use `+`/`-`; larger alphabets use digits.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{} {} {}", self.k(), self.n, self.r).unwrap();
        for s in self.sites() {
            for &x in s {
                out.push(match (self.r, x) {
                    (2, 0) => '+',
                    (2, _) => '-',
                    (_, x) => char::from_digit(x as u32, 36).unwrap(),
                });
            }
            out.push('\n');
        }
        out
    }

    /// Parses [`Alignment::to_text`] output. Accepts `−` (U+2212) for `-`.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse {
            pos: 0,
            msg: "missing header".into(),
        })?;
        let nums: Vec<usize> = header
            .split_whitespace()
            .map(|x| x.parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Parse {
                pos: 0,
                msg: "header must be `k n r`".into(),
            })?;
        let [k, n, r] = nums[..] else {
            return Err(Error::Parse {
                pos: 0,
                msg: "header must be `k n r`".into(),
            });
        };
        if !(2..=36).contains(&r) {
            return Err(Error::StateSpace(format!("r = {r}")));
        }
        let mut states = Vec::with_capacity(k * n);
        for (j, line) in lines.enumerate() {
            let row: Vec<char> = line.trim().chars().collect();
            if row.len() != n {
                return Err(Error::Parse {
                    pos: j + 1,
                    msg: format!("site {} has {} states, expected {n}", j + 1, row.len()),
                });
            }
            for c in row {
                let s = match (r, c) {
                    (2, '+') => 0,
                    (2, '-') | (2, '\u{2212}') => 1,
                    (_, c) => c
                        .to_digit(36)
                        .filter(|&d| (d as usize) < r)
                        .ok_or_else(|| Error::Parse {
                            pos: j + 1,
                            msg: format!("invalid state '{c}'"),
                        })? as u8,
                };
                states.push(s);
            }
        }
        if states.len() != k * n {
            return Err(Error::Parse {
                pos: 0,
                msg: format!("expected {k} sites, found {}", states.len() / n.max(1)),
            });
        }
        Alignment::from_states(n, r, states)
    }

    /// Reads a nucleotide FASTA file whose record names are leaf labels
    /// `1..=n`, mapping A, C, G, T to states 0..3.
    pub fn from_fasta(text: &str) -> Result<Self> {
        let mut records: Vec<(usize, Vec<u8>)> = vec![];
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('>') {
                let label: usize = name.trim().parse().map_err(|_| Error::Parse {
                    pos: records.len(),
                    msg: format!("record name '{name}' is not a label"),
                })?;
                if label == 0 {
                    return Err(Error::Parse {
                        pos: records.len(),
                        msg: "labels start at 1".into(),
                    });
                }
                records.push((label - 1, vec![]));
            } else {
                let rec = records.last_mut().ok_or_else(|| Error::Parse {
                    pos: 0,
                    msg: "sequence before header".into(),
                })?;
                for c in line.chars() {
                    rec.1.push(match c.to_ascii_uppercase() {
                        'A' => 0,
                        'C' => 1,
                        'G' => 2,
                        'T' => 3,
                        other => {
                            return Err(Error::Parse {
                                pos: rec.0 + 1,
                                msg: format!("invalid nucleotide '{other}'"),
                            })
                        }
                    });
                }
            }
        }
        let n = records.len();
        if n == 0 {
            return Err(Error::Parse {
                pos: 0,
                msg: "no records".into(),
            });
        }
        records.sort_by_key(|r| r.0);
        if records.iter().enumerate().any(|(i, r)| r.0 != i) {
            return Err(Error::LeafSetMismatch(
                "FASTA labels must be exactly 1..=n".into(),
            ));
        }
        let k = records[0].1.len();
        if records.iter().any(|r| r.1.len() != k) {
            return Err(Error::DimensionMismatch(
                "sequences have different lengths".into(),
            ));
        }
        let mut states = Vec::with_capacity(k * n);
        for j in 0..k {
            states.extend(records.iter().map(|r| r.1[j]));
        }
        Alignment::from_states(n, 4, states)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let a = Alignment::from_states(3, 2, vec![0, 1, 0, 1, 1, 0]).unwrap();
        let t = a.to_text();
        assert_eq!(t, "2 3 2\n+-+\n--+\n");
        assert_eq!(Alignment::from_text(&t).unwrap(), a);
        assert_eq!(
            Alignment::from_text("1 2 2\n+\u{2212}\n").unwrap().site(0),
            &[0, 1]
        );
        let b = Alignment::from_states(2, 4, vec![0, 3, 2, 1]).unwrap();
        assert_eq!(Alignment::from_text(&b.to_text()).unwrap(), b);
    }

    #[test]
    fn fasta_import() {
        let a = Alignment::from_fasta(">2\nAC\n>1\nGT\n").unwrap();
        assert_eq!(a.site(0), &[2, 0]);
        assert_eq!(a.site(1), &[3, 1]);
        assert!(Alignment::from_fasta(">1\nAX\n").is_err());
    }

    #[test]
    fn bad_rows_rejected() {
        assert!(Alignment::from_text("1 3 2\n+-\n").is_err());
        assert!(Alignment::from_text("1 2 2\n+x\n").is_err());
        assert!(Alignment::from_text("2 2 2\n++\n").is_err());
    }
}
