//! Embedded reference dataset: the 34-member karate club friendship
//! network (78 edges) with its two-faction split. Node ids are 1-based
//! in the raw table, matching the literature; accessors convert to
//! 0-based indices. "H" is the instructor (node 1) and "A" the
//! administrator (node 34).

use crate::error::{Error, Result};
use crate::graph::AdjacencyMatrix;

pub const KARATE_N: usize = 34;

/// 1-based edge table.
pub const KARATE_EDGES: [(usize, usize); 78] = [
    (1, 2),
    (1, 3),
    (1, 4),
    (1, 5),
    (1, 6),
    (1, 7),
    (1, 8),
    (1, 9),
    (1, 11),
    (1, 12),
    (1, 13),
    (1, 14),
    (1, 18),
    (1, 20),
    (1, 22),
    (1, 32),
    (2, 3),
    (2, 4),
    (2, 8),
    (2, 14),
    (2, 18),
    (2, 20),
    (2, 22),
    (2, 31),
    (3, 4),
    (3, 8),
    (3, 9),
    (3, 10),
    (3, 14),
    (3, 28),
    (3, 29),
    (3, 33),
    (4, 8),
    (4, 13),
    (4, 14),
    (5, 7),
    (5, 11),
    (6, 7),
    (6, 11),
    (6, 17),
    (7, 17),
    (9, 31),
    (9, 33),
    (9, 34),
    (10, 34),
    (14, 34),
    (15, 33),
    (15, 34),
    (16, 33),
    (16, 34),
    (19, 33),
    (19, 34),
    (20, 34),
    (21, 33),
    (21, 34),
    (23, 33),
    (23, 34),
    (24, 26),
    (24, 28),
    (24, 30),
    (24, 33),
    (24, 34),
    (25, 26),
    (25, 28),
    (25, 32),
    (26, 32),
    (27, 30),
    (27, 34),
    (28, 34),
    (29, 32),
    (29, 34),
    (30, 33),
    (30, 34),
    (31, 33),
    (31, 34),
    (32, 33),
    (32, 34),
    (33, 34),
];

/// 1-based ids of the members who stayed with the instructor after the
/// club split; everyone else joined the administrator's club.
pub const KARATE_INSTRUCTOR_FACTION: [usize; 16] =
    [1, 2, 3, 4, 5, 6, 7, 8, 11, 12, 13, 14, 17, 18, 20, 22];

/// The friendship network with 0-based node ids.
pub fn karate_graph() -> AdjacencyMatrix {
    let edges: Vec<(usize, usize)> = KARATE_EDGES.iter().map(|&(u, v)| (u - 1, v - 1)).collect();
    let mut g = AdjacencyMatrix::from_edges(KARATE_N, &edges);
    g.set_labels(
        (1..=KARATE_N)
            .map(|i| match i {
                1 => "H".to_string(),
                34 => "A".to_string(),
                other => other.to_string(),
            })
            .collect(),
    );
    g
}

/// Faction labels, 0-based nodes: 0 = instructor's side, 1 = administrator's.
pub fn karate_factions() -> Vec<usize> {
    let mut labels = vec![1usize; KARATE_N];
    for &id in &KARATE_INSTRUCTOR_FACTION {
        labels[id - 1] = 0;
    }
    labels
}

/// Resolve an anchor given as "H", "A", or a 1-based member number to a
/// 0-based node index.
pub fn karate_anchor(name: &str) -> Result<usize> {
    match name.trim() {
        "H" | "h" => Ok(0),
        "A" | "a" => Ok(KARATE_N - 1),
        other => match other.parse::<usize>() {
            Ok(id) if (1..=KARATE_N).contains(&id) => Ok(id - 1),
            _ => Err(Error::UnknownAnchor(name.to_string())),
        },
    }
}
