use super::{Edge, Phylogeny};
use crate::error::{Error, Result};

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
    upsilon: u64,
    edges: Vec<Edge>,
    n_vertices: usize,
    leaf_labels: Vec<(usize, usize)>,
}

impl<'a> Parser<'a> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            pos: self.pos,
            msg: msg.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn token(&mut self) -> &'a str {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.s.len()
            && !b"(),:;".contains(&self.s[self.pos])
            && !self.s[self.pos].is_ascii_whitespace()
        {
            self.pos += 1;
        }
        std::str::from_utf8(&self.s[start..self.pos]).unwrap_or("")
    }

    fn length(&mut self) -> Result<Option<u64>> {
        if self.peek() != Some(b':') {
            return Ok(None);
        }
        self.pos += 1;
        let tok = self.token();
        let w: f64 = tok
            .parse()
            .map_err(|_| self.err(format!("bad branch length '{tok}'")))?;
        if !(w >= 0.0) || !w.is_finite() {
            return Err(self.err("branch length must be finite and non-negative"));
        }
        let scaled = w * self.upsilon as f64;
        let units = scaled.round();
        if (scaled - units).abs() > 0.05 {
            return Err(self.err(format!(
                "branch length {w} is not on the 1/{} grid",
                self.upsilon
            )));
        }
        Ok(Some(units as u64))
    }

    /// Parses one node and returns `(vertex, child count)`.
    fn node(&mut self) -> Result<(usize, usize)> {
        let v = self.n_vertices;
        self.n_vertices += 1;
        if self.peek() == Some(b'(') {
            self.pos += 1;
            let mut children = 0;
            loop {
                let (c, _) = self.node()?;
                let units = self
                    .length()?
                    .ok_or_else(|| self.err("missing branch length"))?;
                self.edges.push(Edge { a: v, b: c, units });
                children += 1;
                match self.peek() {
                    Some(b',') => self.pos += 1,
                    Some(b')') => {
                        self.pos += 1;
                        break;
                    }
                    _ => return Err(self.err("expected ',' or ')'")),
                }
            }
            self.token();
            Ok((v, children))
        } else {
            let name = self.token();
            let label: usize = name
                .parse()
                .map_err(|_| self.err(format!("leaf name '{name}' is not a positive integer")))?;
            if label == 0 {
                return Err(self.err("leaf labels start at 1"));
            }
            self.leaf_labels.push((label - 1, v));
            Ok((v, 0))
        }
    }
}

/// Parses a Newick string with integer leaf names `1..=n` onto the 1/Υ grid.
/// The outermost node becomes the designated root.
pub fn parse_newick(s: &str, upsilon: u64) -> Result<Phylogeny> {
    if upsilon == 0 {
        return Err(Error::param("Υ must be positive"));
    }
    let mut p = Parser {
        s: s.as_bytes(),
        pos: 0,
        upsilon,
        edges: vec![],
        n_vertices: 0,
        leaf_labels: vec![],
    };
    let (root, children) = p.node()?;
    p.length()?;
    if p.peek() != Some(b';') {
        return Err(p.err("expected ';'"));
    }
    p.pos += 1;
    if p.peek().is_some() {
        return Err(p.err("trailing input"));
    }
    let n = p.leaf_labels.len();
    let mut leaves = vec![usize::MAX; n];
    for &(l, v) in &p.leaf_labels {
        if l >= n || leaves[l] != usize::MAX {
            return Err(Error::Parse {
                pos: p.pos,
                msg: format!("leaf labels must be exactly 1..={n}"),
            });
        }
        leaves[l] = v;
    }
    let root = if children >= 2 { Some(root) } else { None };
    Phylogeny::new(p.n_vertices, p.edges, leaves, upsilon, root)
}

/// Parses every `;`-terminated tree in `s`.
pub fn parse_newick_many(s: &str, upsilon: u64) -> Result<Vec<Phylogeny>> {
    s.split_inclusive(';')
        .filter(|part| !part.trim().is_empty())
        .map(|part| parse_newick(part.trim(), upsilon))
        .collect()
}

fn decimals_for(upsilon: u64) -> usize {
    let mut u = upsilon;
    let (mut twos, mut fives) = (0, 0);
    while u.is_multiple_of(2) {
        u /= 2;
        twos += 1;
    }
    while u.is_multiple_of(5) {
        u /= 5;
        fives += 1;
    }
    if u == 1 {
        twos.max(fives)
    } else {
        (upsilon as f64).log10().ceil() as usize + 2
    }
}

/// Writes `t` rooted at its designated root (or [`Phylogeny::default_root`]),
/// children ordered by smallest leaf label.
pub fn write_newick(t: &Phylogeny) -> String {
    let view = t.view();
    let dec = decimals_for(t.upsilon());
    let mut out = String::new();
    fn rec(t: &Phylogeny, view: &super::RootedView, v: usize, dec: usize, out: &mut String) {
        if view.children[v].is_empty() {
            out.push_str(&(t.label(v).unwrap() + 1).to_string());
        } else {
            out.push('(');
            for (i, &c) in view.children[v].iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                rec(t, view, c, dec, out);
                let e = view.parent[c].unwrap().1;
                out.push_str(&format!(":{:.*}", dec, t.weight(e)));
            }
            out.push(')');
        }
    }
    rec(t, &view, view.root, dec, &mut out);
    out.push(';');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::tree_metric;

    #[test]
    fn round_trip_is_exact() {
        let s = "((1:0.2,2:0.3):0.1,(3:0.2,4:0.2):0.1);";
        let t = parse_newick(s, 10).unwrap();
        assert_eq!(t.root(), Some(0));
        let w = write_newick(&t);
        assert_eq!(w, s);
        let t2 = parse_newick(&w, 10).unwrap();
        assert_eq!(tree_metric(&t), tree_metric(&t2));
    }

    #[test]
    fn non_decimal_grid_round_trips() {
        let t = parse_newick("(1:0.3333,2:0.6667,3:1.0);", 3).unwrap();
        let w = write_newick(&t);
        let t2 = parse_newick(&w, 3).unwrap();
        assert_eq!(tree_metric(&t), tree_metric(&t2));
    }

    #[test]
    fn errors_carry_positions() {
        assert!(matches!(
            parse_newick("((1:0.1,2:0.1);", 10),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            parse_newick("(1:0.15,2:0.1,3:0.1);", 10),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            parse_newick("(a:0.1,2:0.1,3:0.1);", 10),
            Err(Error::Parse { .. })
        ));
        assert!(parse_newick("(1:0.1,2:0.1,4:0.1);", 10).is_err());
    }
}
