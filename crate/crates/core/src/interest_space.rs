//! Sparse resource field over the integer lattice.

use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::levy_sampler::Displacement;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticePoint {
    pub x: i64,
    pub y: i64,
}

impl LatticePoint {
    pub const ORIGIN: LatticePoint = LatticePoint { x: 0, y: 0 };

    pub fn new(x: i64, y: i64) -> Self {
        LatticePoint { x, y }
    }

    pub fn offset(self, d: Displacement) -> Self {
        LatticePoint {
            x: self.x + d.dx,
            y: self.y + d.dy,
        }
    }
}

impl std::fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

/// Resource counts `C(X, t)`. Only cells with a positive count are stored,
/// and counts only ever grow.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InterestSpace {
    counts: HashMap<LatticePoint, u64>,
}

impl InterestSpace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn count(&self, at: LatticePoint) -> u64 {
        self.counts.get(&at).copied().unwrap_or(0)
    }

    pub fn is_active(&self, at: LatticePoint) -> bool {
        self.counts.contains_key(&at)
    }

    /// Adds one unit of resource at `at`.
    pub fn deposit(&mut self, at: LatticePoint) {
        *self.counts.entry(at).or_insert(0) += 1;
    }

    /// Number of cells holding at least one unit.
    pub fn n_active(&self) -> usize {
        self.counts.len()
    }

    pub fn total_resources(&self) -> u64 {
        self.counts.values().sum()
    }

    /// Active sites sorted by coordinate.
    pub fn active_sites(&self) -> Vec<(LatticePoint, u64)> {
        let mut sites: Vec<_> = self.counts.iter().map(|(&p, &c)| (p, c)).collect();
        sites.sort_unstable();
        sites
    }

    /// Writes `x,y,count` rows (with header) in coordinate order.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "y", "count"])?;
        for (p, c) in self.active_sites() {
            w.serialize((p.x, p.y, c))?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn untouched_cell_is_empty() {
        let space = InterestSpace::new();
        assert_eq!(space.count(LatticePoint::new(4, -2)), 0);
        assert_eq!(space.n_active(), 0);
    }

    #[test]
    fn deposits_are_additive() {
        let mut space = InterestSpace::new();
        let o = LatticePoint::ORIGIN;
        space.deposit(o);
        assert_eq!(space.count(o), 1);
        space.deposit(o);
        assert_eq!(space.count(o), 2);
        space.deposit(LatticePoint::new(3, -1));
        assert_eq!(space.count(o), 2);
        assert_eq!(space.count(LatticePoint::new(3, -1)), 1);
    }

    #[test]
    fn n_active_counts_distinct_cells() {
        let mut space = InterestSpace::new();
        let cells = [
            LatticePoint::new(0, 0),
            LatticePoint::new(1, 0),
            LatticePoint::new(1, 0),
            LatticePoint::new(-5, 7),
        ];
        let mut prev = 0;
        for c in cells {
            let was_active = space.is_active(c);
            space.deposit(c);
            assert_eq!(space.n_active(), prev + usize::from(!was_active));
            prev = space.n_active();
        }
        assert_eq!(space.n_active(), 3);
        assert_eq!(space.total_resources(), 4);
    }

    #[test]
    fn csv_dump_is_sorted() {
        let mut space = InterestSpace::new();
        space.deposit(LatticePoint::new(2, 0));
        space.deposit(LatticePoint::new(-1, 3));
        space.deposit(LatticePoint::new(-1, 3));
        let mut buf = Vec::new();
        space.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "x,y,count\n-1,3,2\n2,0,1\n");
    }
}
