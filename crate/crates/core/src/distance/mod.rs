//! Combinatorial distances between phylogenies: subtree swaps on
//! homogeneous trees and blow-ups on general ones.

mod blowup;
mod swap;

pub use blowup::{
    blowup_apply, blowup_distance_exact, blowup_neighborhood_count, blowup_upper_bound,
    is_isomorphic, BlowupMove, BLOWUP_EXACT_LIMIT,
};
pub use swap::{
    homogeneous_shape, swap_apply, swap_ball_size, swap_distance_exact, swap_moves, swap_neighbors,
    SwapNeighbor, SWAP_EXACT_HEIGHT,
};
