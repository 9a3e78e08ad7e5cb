//! Smooth fans in a rank-3 lattice, star subdivisions and torus-invariant divisors.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{det3, ExpVec};

pub type Ray = [i64; 3];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmoothFan {
    pub rays: Vec<Ray>,
    pub cones: Vec<[usize; 3]>,
}

/// Coefficients of one torus-invariant divisor, indexed by ray.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Divisor {
    pub coeffs: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DivisorSet {
    pub divisors: Vec<Divisor>,
}

/// The new ray of a star subdivision and the rays it was summed from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subdivision {
    pub new_ray: usize,
    pub parents: Vec<usize>,
}

impl Divisor {
    pub fn new(coeffs: Vec<i64>) -> Self {
        Divisor { coeffs }
    }

    /// `c * E_ray` on a fan with `n` rays.
    pub fn prime(n: usize, ray: usize, c: i64) -> Self {
        let mut coeffs = vec![0; n];
        coeffs[ray] = c;
        Divisor { coeffs }
    }

    pub fn pull_back(&self, sub: &Subdivision) -> Divisor {
        let mut coeffs = self.coeffs.clone();
        debug_assert_eq!(coeffs.len(), sub.new_ray);
        coeffs.push(sub.parents.iter().map(|&p| self.coeffs[p]).sum());
        Divisor { coeffs }
    }

    /// Per-ray minimum.
    pub fn meet(&self, other: &Divisor) -> Divisor {
        Divisor { coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| *a.min(b)).collect() }
    }
}

impl DivisorSet {
    pub fn new(divisors: Vec<Divisor>) -> Self {
        DivisorSet { divisors }
    }

    pub fn pull_back(&self, sub: &Subdivision) -> DivisorSet {
        DivisorSet { divisors: self.divisors.iter().map(|d| d.pull_back(sub)).collect() }
    }

    pub fn len(&self) -> usize {
        self.divisors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.divisors.is_empty()
    }
}

fn sorted2(i: usize, j: usize) -> (usize, usize) {
    (i.min(j), i.max(j))
}

fn sorted3(c: &[usize; 3]) -> [usize; 3] {
    let mut s = *c;
    s.sort_unstable();
    s
}

impl SmoothFan {
    pub fn new(rays: Vec<Ray>, cones: Vec<[usize; 3]>) -> Result<Self> {
        let fan = SmoothFan { rays, cones };
        fan.check()?;
        Ok(fan)
    }

    /// The positive octant: one cone on the standard basis.
    pub fn octant() -> Self {
        SmoothFan { rays: vec![[1, 0, 0], [0, 1, 0], [0, 0, 1]], cones: vec![[0, 1, 2]] }
    }

    pub fn cone_det(&self, cone: &[usize; 3]) -> i64 {
        det3(&cone.map(|i| self.rays[i]))
    }

    /// Unimodular cones, valid ray indices, no repeated cones, interior faces shared by at most two cones.
    pub fn check(&self) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for c in &self.cones {
            if c.iter().any(|&i| i >= self.rays.len()) {
                return Err(Error::NotACone(format!("{c:?} uses an unknown ray")));
            }
            let d = self.cone_det(c);
            if d.abs() != 1 {
                return Err(Error::NonUnimodular(d));
            }
            if !seen.insert(sorted3(c)) {
                return Err(Error::NotACone(format!("{c:?} listed twice")));
            }
        }
        for (face, cones) in self.two_cones() {
            if cones.len() > 2 {
                return Err(Error::NotAFace(format!("{face:?} lies in {} cones", cones.len())));
            }
        }
        Ok(())
    }

    /// Every 2-dimensional face with the indices of the max cones containing it.
    pub fn two_cones(&self) -> BTreeMap<(usize, usize), Vec<usize>> {
        let mut out: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (ci, c) in self.cones.iter().enumerate() {
            for (p, q) in [(0, 1), (0, 2), (1, 2)] {
                out.entry(sorted2(c[p], c[q])).or_default().push(ci);
            }
        }
        out
    }

    pub fn is_interior(&self, face: (usize, usize)) -> bool {
        self.two_cones().get(&sorted2(face.0, face.1)).is_some_and(|c| c.len() == 2)
    }

    pub fn find_cone(&self, rays: [usize; 3]) -> Option<usize> {
        let s = sorted3(&rays);
        self.cones.iter().position(|c| sorted3(c) == s)
    }

    fn sum_rays(&self, idx: &[usize]) -> Ray {
        let mut r = [0; 3];
        for &i in idx {
            for k in 0..3 {
                r[k] += self.rays[i][k];
            }
        }
        r
    }

    /// Inserts `v_i + v_j`; each max cone containing the face splits in two.
    pub fn star_subdivide_2cone(&self, face: (usize, usize)) -> Result<(SmoothFan, Subdivision)> {
        let (i, j) = face;
        let incident: Vec<usize> = self
            .cones
            .iter()
            .enumerate()
            .filter(|(_, c)| c.contains(&i) && c.contains(&j) && i != j)
            .map(|(k, _)| k)
            .collect();
        if incident.is_empty() {
            return Err(Error::NotAFace(format!("rays {i},{j} span no face of the fan")));
        }
        let n = self.rays.len();
        let mut rays = self.rays.clone();
        rays.push(self.sum_rays(&[i, j]));
        let mut cones = vec![];
        for (k, c) in self.cones.iter().enumerate() {
            if incident.contains(&k) {
                cones.push(c.map(|r| if r == j { n } else { r }));
                cones.push(c.map(|r| if r == i { n } else { r }));
            } else {
                cones.push(*c);
            }
        }
        Ok((SmoothFan { rays, cones }, Subdivision { new_ray: n, parents: vec![i.min(j), i.max(j)] }))
    }

    /// Inserts `v_1 + v_2 + v_3` into the max cone at index `cone`; it splits in three.
    pub fn star_subdivide_3cone(&self, cone: usize) -> Result<(SmoothFan, Subdivision)> {
        let c = *self
            .cones
            .get(cone)
            .ok_or_else(|| Error::NotACone(format!("no max cone with index {cone}")))?;
        let n = self.rays.len();
        let mut rays = self.rays.clone();
        rays.push(self.sum_rays(&c));
        let mut cones = vec![];
        for (k, old) in self.cones.iter().enumerate() {
            if k == cone {
                for p in 0..3 {
                    let mut new = c;
                    new[p] = n;
                    cones.push(new);
                }
            } else {
                cones.push(*old);
            }
        }
        let mut parents = c.to_vec();
        parents.sort_unstable();
        Ok((SmoothFan { rays, cones }, Subdivision { new_ray: n, parents }))
    }

    /// Coefficients of `divisor` on the rays of max cone `cone`, in the cone's ray order.
    pub fn chart_exponents(&self, divisor: &Divisor, cone: usize) -> Result<ExpVec> {
        let c = self
            .cones
            .get(cone)
            .ok_or_else(|| Error::NotACone(format!("no max cone with index {cone}")))?;
        if divisor.coeffs.len() != self.rays.len() {
            return Err(Error::InvalidState(format!(
                "divisor has {} coefficients for {} rays",
                divisor.coeffs.len(),
                self.rays.len()
            )));
        }
        Ok(ExpVec(c.iter().map(|&r| divisor.coeffs[r]).collect()))
    }

    /// Coordinates of `p` in the basis of a max cone (exact: the cone is unimodular).
    pub fn cone_coordinates(&self, cone: usize, p: [i64; 3]) -> [i64; 3] {
        let m = self.cones[cone].map(|i| self.rays[i]);
        let d = det3(&m);
        // p = lambda * M, so lambda = p * adj(M) / det.
        let adj = |r: usize, c: usize| {
            let rows: Vec<usize> = (0..3).filter(|&k| k != c).collect();
            let cols: Vec<usize> = (0..3).filter(|&k| k != r).collect();
            let minor = m[rows[0]][cols[0]] * m[rows[1]][cols[1]] - m[rows[0]][cols[1]] * m[rows[1]][cols[0]];
            if (r + c).is_multiple_of(2) {
                minor
            } else {
                -minor
            }
        };
        std::array::from_fn(|j| (0..3).map(|k| p[k] * adj(k, j)).sum::<i64>() * d)
    }

    /// Index of a max cone containing `p`, if any.
    pub fn locate(&self, p: [i64; 3]) -> Option<usize> {
        (0..self.cones.len()).find(|&c| self.cone_coordinates(c, p).iter().all(|&x| x >= 0))
    }

    /// Face checks: the barycenter of every cone and of every 2-face lies only in cones containing it.
    pub fn check_faces(&self) -> Result<()> {
        for (ci, c) in self.cones.iter().enumerate() {
            let center = self.sum_rays(c);
            for k in 0..self.cones.len() {
                if k != ci && self.cone_coordinates(k, center).iter().all(|&x| x >= 0) {
                    return Err(Error::NotACone(format!("cones {ci} and {k} overlap")));
                }
            }
        }
        for ((i, j), owners) in self.two_cones() {
            let center = self.sum_rays(&[i, j]);
            for k in 0..self.cones.len() {
                if !owners.contains(&k) && self.cone_coordinates(k, center).iter().all(|&x| x >= 0) {
                    return Err(Error::NotAFace(format!("face {i},{j} meets cone {k}")));
                }
            }
        }
        Ok(())
    }
}

/// JSON file layout `{rays, cones, divisors: [{coeffs}]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FanFile {
    pub rays: Vec<Ray>,
    pub cones: Vec<[usize; 3]>,
    #[serde(default)]
    pub divisors: Vec<Divisor>,
}

impl FanFile {
    pub fn new(fan: &SmoothFan, divisors: &DivisorSet) -> Self {
        FanFile { rays: fan.rays.clone(), cones: fan.cones.clone(), divisors: divisors.divisors.clone() }
    }

    pub fn from_json(text: &str) -> Result<(SmoothFan, DivisorSet)> {
        let f: FanFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let fan = SmoothFan::new(f.rays, f.cones)?;
        for d in &f.divisors {
            if d.coeffs.len() != fan.rays.len() {
                return Err(Error::Parse(format!("divisor needs {} coefficients", fan.rays.len())));
            }
            if d.coeffs.iter().any(|&c| c < 0) {
                return Err(Error::Parse("divisor coefficients must be nonnegative".into()));
            }
        }
        Ok((fan, DivisorSet::new(f.divisors)))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fan serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn octant_subdivisions() {
        let fan = SmoothFan::octant();
        let (f2, sub) = fan.star_subdivide_2cone((0, 1)).unwrap();
        assert_eq!(f2.rays[3], [1, 1, 0]);
        assert_eq!(f2.cones.len(), 2);
        f2.check().unwrap();
        f2.check_faces().unwrap();
        assert!(f2.is_interior((2, 3)));
        let d = Divisor::new(vec![2, 3, 0]).pull_back(&sub);
        assert_eq!(d.coeffs[3], 5);

        let (f3, sub) = fan.star_subdivide_3cone(0).unwrap();
        assert_eq!(f3.rays[3], [1, 1, 1]);
        assert_eq!(f3.cones.len(), 3);
        f3.check().unwrap();
        f3.check_faces().unwrap();
        assert_eq!(Divisor::new(vec![1, 2, 4]).pull_back(&sub).coeffs[3], 7);

        assert!(matches!(fan.star_subdivide_2cone((0, 5)), Err(Error::NotAFace(_))));
        assert!(matches!(fan.star_subdivide_3cone(4), Err(Error::NotACone(_))));
    }

    #[test]
    fn chart_exponent_examples() {
        let fan = SmoothFan::octant();
        let d = Divisor::prime(3, 0, 2);
        assert_eq!(fan.chart_exponents(&d, 0).unwrap(), ExpVec::from([2, 0, 0]));
        let (f2, sub) = fan.star_subdivide_2cone((0, 1)).unwrap();
        let d2 = d.pull_back(&sub);
        let c = f2.find_cone([0, 3, 2]).unwrap();
        assert_eq!(f2.chart_exponents(&d2, c).unwrap(), ExpVec::from([2, 2, 0]));
        assert_eq!(fan.chart_exponents(&Divisor::new(vec![0; 3]), 0).unwrap(), ExpVec::zero(3));
        assert!(matches!(fan.chart_exponents(&d, 3), Err(Error::NotACone(_))));
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"rays":[[1,0,0],[0,1,0],[0,0,1]],"cones":[[0,1,2]],"divisors":[{"coeffs":[2,0,0]},{"coeffs":[0,3,0]}]}"#;
        let (fan, ds) = FanFile::from_json(text).unwrap();
        assert_eq!(fan, SmoothFan::octant());
        assert_eq!(ds.len(), 2);
        let back = FanFile::new(&fan, &ds).to_json();
        assert_eq!(FanFile::from_json(&back).unwrap(), (fan, ds));
        assert!(matches!(FanFile::from_json("{"), Err(Error::Parse(_))));
        let singular = r#"{"rays":[[1,0,0],[1,2,0],[0,0,1]],"cones":[[0,1,2]]}"#;
        assert!(matches!(FanFile::from_json(singular), Err(Error::NonUnimodular(2))));
    }

    #[test]
    fn locate_points() {
        let (fan, _) = SmoothFan::octant().star_subdivide_2cone((0, 1)).unwrap();
        assert!(fan.locate([3, 1, 2]).is_some());
        assert!(fan.locate([-1, 0, 0]).is_none());
    }
}
