//! Sampling from the finite jump-in measure of one endpoint.

use rand::Rng;

use crate::boundary::JumpMeasure;

/// Tabulated inverse CDF of a jump density.
#[derive(Debug, Clone)]
struct DensityTable {
    xs: Vec<f64>,
    cdf: Vec<f64>,
}

impl DensityTable {
    const CELLS: usize = 1024;

    fn new(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> Option<Self> {
        let xs: Vec<f64> = (0..=Self::CELLS).map(|k| lo + (hi - lo) * k as f64 / Self::CELLS as f64).collect();
        let fs: Vec<f64> = xs.iter().map(|&x| f(x).max(0.0)).collect();
        let mut cdf = vec![0.0; xs.len()];
        for k in 1..xs.len() {
            cdf[k] = cdf[k - 1] + 0.5 * (fs[k - 1] + fs[k]) * (xs[k] - xs[k - 1]);
        }
        let total = *cdf.last()?;
        if !(total > 0.0) {
            return None;
        }
        cdf.iter_mut().for_each(|c| *c /= total);
        Some(DensityTable { xs, cdf })
    }

    fn sample(&self, u: f64) -> f64 {
        let j = self.cdf.partition_point(|&c| c <= u).clamp(1, self.xs.len() - 1) - 1;
        let span = self.cdf[j + 1] - self.cdf[j];
        let t = if span > 0.0 { (u - self.cdf[j]) / span } else { 0.5 };
        self.xs[j] + t * (self.xs[j + 1] - self.xs[j])
    }
}

/// Where a jump lands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Landing {
    /// The i-th atom.
    Atom(usize),
    /// A point drawn from the density.
    Point(f64),
    /// The opposite endpoint.
    Far,
}

/// The jump measure split into its finite components.
#[derive(Debug, Clone)]
pub struct JumpSampler {
    pub atoms: Vec<(f64, f64)>,
    pub atom_mass: f64,
    pub density_mass: f64,
    pub far: f64,
    table: Option<DensityTable>,
}

impl JumpSampler {
    pub fn new(j: &JumpMeasure) -> Self {
        let atoms: Vec<(f64, f64)> = j.atoms.iter().filter(|a| a.mass > 0.0).map(|a| (a.x, a.mass)).collect();
        let atom_mass = atoms.iter().map(|a| a.1).sum();
        let (table, density_mass) = match &j.density {
            Some(d) => {
                let mass = d.mass();
                match DensityTable::new(&*d.density, d.lo, d.hi) {
                    Some(t) if mass > 0.0 => (Some(t), mass),
                    _ => (None, 0.0),
                }
            }
            None => (None, 0.0),
        };
        JumpSampler { atoms, atom_mass, density_mass, far: j.far_end, table }
    }

    pub fn total(&self) -> f64 {
        self.atom_mass + self.density_mass + self.far
    }

    /// Draw a landing site with probability proportional to mass.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Landing {
        let mut u = rng.random::<f64>() * self.total();
        for (i, &(_, mass)) in self.atoms.iter().enumerate() {
            if u < mass {
                return Landing::Atom(i);
            }
            u -= mass;
        }
        if u < self.density_mass {
            if let Some(t) = &self.table {
                return Landing::Point(t.sample(rng.random::<f64>()));
            }
        }
        if self.far > 0.0 {
            Landing::Far
        } else if let Some(i) = self.atoms.len().checked_sub(1) {
            Landing::Atom(i)
        } else {
            // only reachable through rounding at the very top of the density's share
            Landing::Point(self.table.as_ref().map_or(f64::NAN, |t| t.sample(1.0 - f64::EPSILON)))
        }
    }
}
