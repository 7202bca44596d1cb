use crate::error::{Error, Result};
use crate::game::{GameDesign, A_MAX, A_MIN, PI_MAX, PI_MIN};
use crate::params::linspace;

/// Evenly spaced lattice of designs. Point `(i, j)` has the `i`-th value of
/// A and the `j`-th value of pi, and index `i * n_pi + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignGrid {
    a_values: Vec<f64>,
    pi_values: Vec<f64>,
}

impl DesignGrid {
    pub const SIDE: usize = 20;

    pub fn new(n_a: usize, n_pi: usize) -> Result<Self> {
        if n_a < 2 || n_pi < 2 {
            return Err(Error::InvalidArgument("design grid needs at least 2 values per axis".into()));
        }
        Ok(Self {
            a_values: linspace(A_MIN, A_MAX, n_a),
            pi_values: linspace(PI_MIN, PI_MAX, n_pi),
        })
    }

    /// 20 x 20 lattice over the full design space.
    pub fn standard() -> Self {
        Self::new(Self::SIDE, Self::SIDE).expect("standard grid is valid")
    }

    pub fn a_values(&self) -> &[f64] {
        &self.a_values
    }

    pub fn pi_values(&self) -> &[f64] {
        &self.pi_values
    }

    pub fn n_a(&self) -> usize {
        self.a_values.len()
    }

    pub fn n_pi(&self) -> usize {
        self.pi_values.len()
    }

    pub fn len(&self) -> usize {
        self.n_a() * self.n_pi()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, ia: usize, ip: usize) -> usize {
        ia * self.n_pi() + ip
    }

    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index / self.n_pi(), index % self.n_pi())
    }

    pub fn design(&self, index: usize) -> GameDesign {
        let (ia, ip) = self.coords(index);
        GameDesign {
            a: self.a_values[ia],
            pi: self.pi_values[ip],
        }
    }

    pub fn designs(&self) -> impl Iterator<Item = GameDesign> + '_ {
        (0..self.len()).map(|i| self.design(i))
    }

    /// Index of the lattice point nearest a point of the unit square.
    pub fn snap_unit(&self, u: f64, v: f64) -> usize {
        let ia = (u * (self.n_a() - 1) as f64).round() as usize;
        let ip = (v * (self.n_pi() - 1) as f64).round() as usize;
        self.index(ia.min(self.n_a() - 1), ip.min(self.n_pi() - 1))
    }

    /// Index of the lattice point nearest `design`.
    pub fn nearest(&self, design: &GameDesign) -> usize {
        let u = (design.a - A_MIN) / (A_MAX - A_MIN);
        let v = (design.pi - PI_MIN) / (PI_MAX - PI_MIN);
        self.snap_unit(u.clamp(0.0, 1.0), v.clamp(0.0, 1.0))
    }
}
