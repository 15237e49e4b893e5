//! Finite 4D lattice with Minkowski signature (+,-,-,-).
//!
//! Sites are ordered row-major over (t, x1, x2, x3) with t slowest, so
//! index = ((t*L + x1)*L + x2)*L + x3.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundary {
    Periodic,
    Open,
}

impl Boundary {
    pub fn as_str(self) -> &'static str {
        match self {
            Boundary::Periodic => "periodic",
            Boundary::Open => "open",
        }
    }
}

impl std::str::FromStr for Boundary {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "periodic" => Ok(Boundary::Periodic),
            "open" => Ok(Boundary::Open),
            _ => Err(Error::Format(format!("unknown boundary '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourVector(pub [f64; 4]);

impl FourVector {
    pub const ZERO: FourVector = FourVector([0.0; 4]);

    pub fn new(t: f64, x1: f64, x2: f64, x3: f64) -> Self {
        FourVector([t, x1, x2, x3])
    }

    /// Minkowski square v·v.
    pub fn interval(&self) -> f64 {
        minkowski_dot(self, self)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0.0)
    }

    pub fn euclidean_norm(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn add(&self, o: &FourVector) -> FourVector {
        FourVector(std::array::from_fn(|i| self.0[i] + o.0[i]))
    }

    pub fn scale(&self, a: f64) -> FourVector {
        FourVector(self.0.map(|c| a * c))
    }

    pub fn neg(&self) -> FourVector {
        self.scale(-1.0)
    }
}

pub fn minkowski_dot(v: &FourVector, w: &FourVector) -> f64 {
    v.0[0] * w.0[0] - v.0[1] * w.0[1] - v.0[2] * w.0[2] - v.0[3] * w.0[3]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntervalClass {
    Coincident,
    Timelike,
    Spacelike,
    Null,
}

impl IntervalClass {
    pub fn of(d: &FourVector) -> Self {
        if d.is_zero() {
            return IntervalClass::Coincident;
        }
        let s = d.interval();
        if s > 0.0 {
            IntervalClass::Timelike
        } else if s < 0.0 {
            IntervalClass::Spacelike
        } else {
            IntervalClass::Null
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            IntervalClass::Coincident => "coincident",
            IntervalClass::Timelike => "timelike",
            IntervalClass::Spacelike => "spacelike",
            IntervalClass::Null => "null",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Lattice {
    extent: usize,
    n_sites: usize,
    boundary: Boundary,
}

impl Lattice {
    /// Any positive extent is accepted; only [`Lattice::center_site`]
    /// requires it to be odd.
    pub fn new(extent: usize, boundary: Boundary) -> Result<Self> {
        if extent == 0 {
            return Err(Error::InvalidParameter {
                name: "extent",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        let n_sites = extent
            .checked_pow(4)
            .ok_or(Error::InvalidParameter {
                name: "extent",
                value: extent as f64,
                reason: "too large",
            })?;
        Ok(Lattice {
            extent,
            n_sites,
            boundary,
        })
    }

    pub fn extent(&self) -> usize {
        self.extent
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    fn check(&self, index: usize) -> Result<()> {
        if index < self.n_sites {
            Ok(())
        } else {
            Err(Error::SiteOutOfRange {
                index,
                n_sites: self.n_sites,
            })
        }
    }

    pub fn coords(&self, index: usize) -> Result<[usize; 4]> {
        self.check(index)?;
        Ok(self.coords_unchecked(index))
    }

    pub(crate) fn coords_unchecked(&self, mut index: usize) -> [usize; 4] {
        let l = self.extent;
        let mut c = [0; 4];
        for mu in (0..4).rev() {
            c[mu] = index % l;
            index /= l;
        }
        c
    }

    pub fn site(&self, coords: [usize; 4]) -> Result<usize> {
        let l = self.extent;
        let mut index = 0;
        for &c in &coords {
            if c >= l {
                return Err(Error::SiteOutOfRange {
                    index: c,
                    n_sites: l,
                });
            }
            index = index * l + c;
        }
        Ok(index)
    }

    /// Site reached from `index` by `n` steps along axis `mu`, wrapping
    /// around the lattice. Open lattices return `None` when leaving the grid.
    pub fn shift(&self, index: usize, mu: usize, n: i64) -> Option<usize> {
        if index >= self.n_sites || mu >= 4 {
            return None;
        }
        let mut c = self.coords_unchecked(index);
        let l = self.extent as i64;
        let v = c[mu] as i64 + n;
        let v = match self.boundary {
            Boundary::Periodic => v.rem_euclid(l),
            Boundary::Open if (0..l).contains(&v) => v,
            Boundary::Open => return None,
        };
        c[mu] = v as usize;
        self.site(c).ok()
    }

    /// Minimal-image representative of an integer coordinate difference.
    pub fn wrap(&self, d: i64) -> i64 {
        let l = self.extent as i64;
        let h = (l - 1) / 2;
        (d + h).rem_euclid(l) - h
    }

    pub(crate) fn separation_ints(&self, y: usize, x: usize) -> [i64; 4] {
        let cy = self.coords_unchecked(y);
        let cx = self.coords_unchecked(x);
        std::array::from_fn(|mu| {
            let d = cy[mu] as i64 - cx[mu] as i64;
            match self.boundary {
                Boundary::Periodic => self.wrap(d),
                Boundary::Open => d,
            }
        })
    }

    /// y - x, using minimal images under periodic boundary.
    pub fn separation(&self, y: usize, x: usize) -> Result<FourVector> {
        self.check(y)?;
        self.check(x)?;
        Ok(FourVector(self.separation_ints(y, x).map(|c| c as f64)))
    }

    pub fn center_site(&self) -> Result<usize> {
        if self.extent % 2 == 0 {
            return Err(Error::EvenExtent(self.extent));
        }
        let h = (self.extent - 1) / 2;
        self.site([h; 4])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn signature() {
        let t = FourVector::new(1.0, 0.0, 0.0, 0.0);
        let x = FourVector::new(0.0, 1.0, 0.0, 0.0);
        let n = FourVector::new(1.0, 1.0, 0.0, 0.0);
        assert_eq!(minkowski_dot(&t, &t), 1.0);
        assert_eq!(minkowski_dot(&x, &x), -1.0);
        assert_eq!(minkowski_dot(&n, &n), 0.0);
        assert_eq!(IntervalClass::of(&n), IntervalClass::Null);
    }

    #[test]
    fn separations() {
        for (b, expect) in [(Boundary::Periodic, -1.0), (Boundary::Open, 8.0)] {
            let lat = Lattice::new(9, b).unwrap();
            let y = lat.site([8, 0, 0, 0]).unwrap();
            let x = lat.site([0, 0, 0, 0]).unwrap();
            assert_eq!(lat.separation(y, x).unwrap().0, [expect, 0.0, 0.0, 0.0]);
            assert!(lat.separation(x, x).unwrap().is_zero());
        }
        let lat = Lattice::new(3, Boundary::Open).unwrap();
        assert!(lat.separation(81, 0).is_err());
    }

    #[test]
    fn center() {
        let lat = Lattice::new(9, Boundary::Periodic).unwrap();
        assert_eq!(lat.n_sites(), 6561);
        assert_eq!(lat.coords(lat.center_site().unwrap()).unwrap(), [4; 4]);
        let lat = Lattice::new(3, Boundary::Open).unwrap();
        assert_eq!(lat.coords(lat.center_site().unwrap()).unwrap(), [1; 4]);
        assert!(Lattice::new(4, Boundary::Open).unwrap().center_site().is_err());
    }

    #[test]
    fn time_is_slowest() {
        let lat = Lattice::new(5, Boundary::Periodic).unwrap();
        assert_eq!(lat.site([1, 0, 0, 0]).unwrap(), 125);
        assert_eq!(lat.shift(0, 0, -1), Some(4 * 125));
        let open = Lattice::new(5, Boundary::Open).unwrap();
        assert_eq!(open.shift(0, 0, -1), None);
    }

    proptest! {
        #[test]
        fn dot_symmetric_bilinear(v in prop::array::uniform4(-10.0f64..10.0),
                                  w in prop::array::uniform4(-10.0f64..10.0),
                                  u in prop::array::uniform4(-10.0f64..10.0),
                                  a in -3.0f64..3.0) {
            let (v, w, u) = (FourVector(v), FourVector(w), FourVector(u));
            prop_assert_eq!(minkowski_dot(&v, &w), minkowski_dot(&w, &v));
            let lhs = minkowski_dot(&v.scale(a).add(&u), &w);
            let rhs = a * minkowski_dot(&v, &w) + minkowski_dot(&u, &w);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }

        #[test]
        fn periodic_separation_antisymmetric(h in 0usize..5, y in 0usize..14641, x in 0usize..14641) {
            let lat = Lattice::new(2 * h + 1, Boundary::Periodic).unwrap();
            let (y, x) = (y % lat.n_sites(), x % lat.n_sites());
            let a = lat.separation(y, x).unwrap();
            let b = lat.separation(x, y).unwrap();
            prop_assert_eq!(a, b.neg());
            for c in a.0 {
                prop_assert!(c.abs() <= h as f64);
            }
        }
    }
}
