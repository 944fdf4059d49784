//! Constructed tree pairs exercising each battery regime.

use crate::error::Result;
use crate::tree::{parse_newick, Phylogeny};

/// Grid used by the constructed instances.
pub const UPSILON: u64 = 10;

/// Homogeneous tree of height `h` with weight `g_units / Υ` and the same
/// tree with leaves `a` and `b` (counted from 1) exchanged.
pub fn single_swap(h: usize, g_units: u64, a: usize, b: usize) -> Result<(Phylogeny, Phylogeny)> {
    let t0 = Phylogeny::homogeneous(h, g_units, UPSILON)?;
    let ts = t0.swap_subtrees(t0.leaf(a - 1), t0.leaf(b - 1))?;
    Ok((t0, ts))
}

fn quartet(first: usize) -> String {
    format!(
        "(({}:0.2,{}:0.2):0.2,({}:0.2,{}:0.2):0.2)",
        first,
        first + 1,
        first + 2,
        first + 3
    )
}

/// Four quartets `A, B, C, D` (leaves 1–4, 5–8, 9–12, 13–16) joined as
/// `((A,B),(C,D))`, every edge 0.2.
pub fn four_quartets() -> Result<Phylogeny> {
    let s = format!(
        "(({}:0.2,{}:0.2):0.2,({}:0.2,{}:0.2):0.2);",
        quartet(1),
        quartet(5),
        quartet(9),
        quartet(13)
    );
    parse_newick(&s, UPSILON)
}

/// [`four_quartets`] against an unrooted tree where the cherries of `A` and
/// `B` interleave on one path, so the restrictions of `A` and `B` share an
/// edge while each stays metric-matching.
pub fn two_cluster_overlap() -> Result<(Phylogeny, Phylogeny)> {
    let ts = format!(
        "(((1:0.2,2:0.2):0.1,(5:0.2,6:0.2):0.1):0.1,(7:0.2,8:0.2):0.2,((3:0.2,4:0.2):0.1,({}:0.2,{}:0.2):0.1):0.1);",
        quartet(9),
        quartet(13)
    );
    Ok((
        four_quartets()?,
        parse_newick(&ts, UPSILON)?.with_root(None)?,
    ))
}

/// [`four_quartets`] against a tree where the path from `Y` (leaves 1–4)
/// to `Z` (leaves 5–8) runs along an edge of `Y`; `Z` hangs `z_units`
/// below that edge.
pub fn non_cohanging(z_units: u64) -> Result<(Phylogeny, Phylogeny)> {
    let z = z_units as f64 / UPSILON as f64;
    let ts = format!(
        "((1:0.2,2:0.2):0.2,((3:0.2,4:0.2):0.1,{}:{z}):0.1,({}:0.2,{}:0.2):0.2);",
        quartet(5),
        quartet(9),
        quartet(13)
    );
    Ok((four_quartets()?, parse_newick(&ts, UPSILON)?))
}
