//! The smooth dyadic partition of unity on the frequency lattice.

use serde::Serialize;

use super::Grid;

/// h(s) = exp(−1/s) for s > 0, else 0.
fn h(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else {
        (-1.0 / s).exp()
    }
}

/// Radial low-pass profile: exactly 1 on t ≤ 1, exactly 0 on t ≥ 2, smooth between.
pub fn bump(t: f64) -> f64 {
    if t <= 1.0 {
        1.0
    } else if t >= 2.0 {
        0.0
    } else {
        let a = h(2.0 - t);
        a / (a + h(t - 1.0))
    }
}

/// η_{≤k}(ξ) = bump(|ξ|/2^k) and η_k = η_{≤k} − η_{≤k−1}, tabulated against
/// the integer squared radius r² = |m|² of lattice frequencies ξ = m/T.
///
/// Bands run over [k_min, k_max]. Every nonzero lattice frequency has
/// |ξ| ≥ 1/T ≥ 2^{k_min}, so η_{≤k_min−1} vanishes on it and the lowest band
/// may absorb the zero mode. At k_max the low-pass is identically 1.
#[derive(Clone, Debug, Serialize)]
pub struct Bands {
    pub grid: Grid,
    pub k_min: i32,
    pub k_max: i32,
    max_r2: usize,
}

impl Bands {
    pub fn new(grid: Grid) -> Self {
        let k_min = (1.0 / grid.period).log2().floor() as i32;
        let k_max = grid.max_frequency().log2().ceil() as i32;
        let max_r2 = grid.dim * (grid.n / 2) * (grid.n / 2);
        Bands { grid, k_min, k_max: k_max.max(k_min), max_r2 }
    }

    pub fn range(&self) -> std::ops::RangeInclusive<i32> {
        self.k_min..=self.k_max
    }

    pub fn contains(&self, k: i32) -> bool {
        self.range().contains(&k)
    }

    pub fn max_r2(&self) -> usize {
        self.max_r2
    }

    /// η_{≤k} at integer squared radius r2.
    pub fn low(&self, k: i32, r2: usize) -> f64 {
        if k < self.k_min {
            0.0
        } else if k >= self.k_max {
            1.0
        } else {
            bump((r2 as f64).sqrt() / self.grid.period / (k as f64).exp2())
        }
    }

    /// η_k at integer squared radius r2; zero outside [k_min, k_max].
    pub fn eta(&self, k: i32, r2: usize) -> f64 {
        if !self.contains(k) {
            return 0.0;
        }
        self.low(k, r2) - self.low(k - 1, r2)
    }

    pub fn low_table(&self, k: i32) -> Vec<f64> {
        (0..=self.max_r2).map(|r2| self.low(k, r2)).collect()
    }

    pub fn band_table(&self, k: i32) -> Vec<f64> {
        (0..=self.max_r2).map(|r2| self.eta(k, r2)).collect()
    }

    /// Largest lattice r² on which η_{≤k} is nonzero.
    pub fn low_support_r2(&self, k: i32) -> Option<usize> {
        (0..=self.max_r2).rev().find(|&r2| self.low(k, r2) != 0.0)
    }
}

pub fn build_partition(grid: Grid) -> Bands {
    Bands::new(grid)
}

/// Norms of one band of one component (`component == None` aggregates).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BandRow {
    pub k: i32,
    pub component: Option<usize>,
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BandProfile {
    pub grid: Grid,
    pub degree: usize,
    pub rows: Vec<BandRow>,
    /// Σ_k ‖P_k a‖₂² / ‖a‖₂².
    pub orthogonality_ratio: f64,
}

impl BandProfile {
    /// Aggregated rows, one per band in increasing k.
    pub fn totals(&self) -> Vec<&BandRow> {
        self.rows.iter().filter(|r| r.component.is_none()).collect()
    }

    pub fn total(&self, k: i32) -> Option<&BandRow> {
        self.rows.iter().find(|r| r.k == k && r.component.is_none())
    }

    /// Band with the largest aggregated L² norm.
    pub fn dominant(&self) -> Option<i32> {
        self.totals().into_iter().max_by(|a, b| a.l2.total_cmp(&b.l2)).map(|r| r.k)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["k", "component", "l1", "l2", "linf"]).expect("in-memory write");
        for r in &self.rows {
            let c = r.component.map_or_else(|| "total".to_string(), |c| c.to_string());
            w.write_record([r.k.to_string(), c, fmt(r.l1), fmt(r.l2), fmt(r.linf)]).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii")
    }
}

fn fmt(x: f64) -> String {
    format!("{x:.12e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_endpoints() {
        assert_eq!(bump(0.0), 1.0);
        assert_eq!(bump(1.0), 1.0);
        assert_eq!(bump(2.0), 0.0);
        assert!((bump(1.5) - 0.5).abs() < 1e-15);
        let mut prev = 1.0;
        for i in 0..=100 {
            let v = bump(1.0 + i as f64 / 100.0);
            assert!(v <= prev && (0.0..=1.0).contains(&v));
            prev = v;
        }
    }

    #[test]
    fn telescoping_partition() {
        let b = Bands::new(Grid::new(3, 32, 1.0).unwrap());
        assert_eq!((b.k_min, b.k_max), (0, 5));
        for r2 in 1..=b.max_r2() {
            let s: f64 = b.range().map(|k| b.eta(k, r2)).sum();
            assert!((s - 1.0).abs() < 1e-15);
            let live = b.range().filter(|&k| b.eta(k, r2) != 0.0).count();
            assert!(live <= 2);
            for k in b.range() {
                let e = b.eta(k, r2);
                assert!((0.0..=1.0).contains(&e));
                let r = (r2 as f64).sqrt();
                if e != 0.0 && k > b.k_min {
                    assert!(r >= (k as f64 - 1.0).exp2() && r <= (k as f64 + 1.0).exp2());
                }
            }
        }
        assert_eq!(b.eta(b.k_min, 0), 1.0);
        assert_eq!(b.eta(b.k_min - 1, 5), 0.0);
        assert_eq!(b.eta(b.k_max + 1, 5), 0.0);
    }

    #[test]
    fn dyadic_centres_live_in_one_band() {
        let b = Bands::new(Grid::new(2, 64, 1.0).unwrap());
        for k in 1..5 {
            let r2 = 1usize << (2 * k);
            assert_eq!(b.eta(k, r2), 1.0);
        }
    }

    #[test]
    fn period_shifts_band_range() {
        let b = Bands::new(Grid::new(2, 64, 4.0).unwrap());
        assert_eq!(b.k_min, -2);
        // |ξ| = 1/4 for m = 1 lies in the lowest band.
        assert_eq!(b.eta(-2, 1), 1.0);
    }
}
