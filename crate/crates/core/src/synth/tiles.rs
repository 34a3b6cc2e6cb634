//! A square-tile map of the states, used as stand-in geometry in tests and
//! synthetic runs.

use crate::report::{Geometry, StateShape};
use crate::StateCode;

/// (state, column, row) on an 11 × 8 grid.
const TILES: [(&str, u8, u8); 51] = [
    ("AK", 0, 0),
    ("ME", 10, 0),
    ("WI", 5, 1),
    ("VT", 9, 1),
    ("NH", 10, 1),
    ("WA", 0, 2),
    ("ID", 1, 2),
    ("MT", 2, 2),
    ("ND", 3, 2),
    ("MN", 4, 2),
    ("IL", 5, 2),
    ("MI", 6, 2),
    ("NY", 8, 2),
    ("MA", 9, 2),
    ("OR", 0, 3),
    ("NV", 1, 3),
    ("WY", 2, 3),
    ("SD", 3, 3),
    ("IA", 4, 3),
    ("IN", 5, 3),
    ("OH", 6, 3),
    ("PA", 7, 3),
    ("NJ", 8, 3),
    ("CT", 9, 3),
    ("RI", 10, 3),
    ("CA", 0, 4),
    ("UT", 1, 4),
    ("CO", 2, 4),
    ("NE", 3, 4),
    ("MO", 4, 4),
    ("KY", 5, 4),
    ("WV", 6, 4),
    ("VA", 7, 4),
    ("MD", 8, 4),
    ("DE", 9, 4),
    ("AZ", 1, 5),
    ("NM", 2, 5),
    ("KS", 3, 5),
    ("AR", 4, 5),
    ("TN", 5, 5),
    ("NC", 6, 5),
    ("SC", 7, 5),
    ("DC", 8, 5),
    ("OK", 3, 6),
    ("LA", 4, 6),
    ("MS", 5, 6),
    ("AL", 6, 6),
    ("GA", 7, 6),
    ("HI", 0, 7),
    ("TX", 3, 7),
    ("FL", 8, 7),
];

const TILE_DEG: f64 = 4.0;
const GAP_DEG: f64 = 0.3;

pub fn tile_grid() -> Vec<StateShape> {
    let mut out: Vec<StateShape> = TILES
        .iter()
        .map(|&(code, col, row)| {
            let x0 = -125.0 + col as f64 * TILE_DEG;
            let y1 = 50.0 - row as f64 * TILE_DEG;
            let (x1, y0) = (x0 + TILE_DEG - GAP_DEG, y1 - TILE_DEG + GAP_DEG);
            StateShape {
                state: StateCode::from_abbrev(code).expect("tile codes are valid"),
                geometry: Geometry(vec![vec![vec![(x0, y0), (x1, y0), (x1, y1), (x0, y1), (x0, y0)]]]),
            }
        })
        .collect();
    out.sort_by_key(|s| s.state);
    out
}
