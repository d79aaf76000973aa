//! Rank-1 lattice point sets and their concatenation with random or anchored
//! trailing coordinates.

use std::f64::consts::PI;
use std::io::{self, Write};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Points stored row-major, `dim` coordinates per point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 || coords.len() % dim != 0 {
            return Err(Error::invalid(format!(
                "{} coordinates do not form points of dimension {dim}",
                coords.len()
            )));
        }
        Ok(Self { dim, coords })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    /// Projection onto the coordinates `range` (0-based, half-open).
    pub fn project(&self, range: std::ops::Range<usize>) -> PointSet {
        let coords = self
            .iter()
            .flat_map(|p| p[range.clone()].iter().copied())
            .collect();
        PointSet {
            dim: range.len(),
            coords,
        }
    }

    /// One point per row, comma separated, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        for p in self.iter() {
            let row: Vec<String> = p.iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// A rank-1 lattice rule with `N` points and generating vector `z ∈ {1..N-1}^d`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeRule {
    n: u64,
    z: Vec<u64>,
}

impl LatticeRule {
    pub fn new(n: u64, z: Vec<u64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("lattice needs N >= 2 points, got {n}")));
        }
        if z.is_empty() {
            return Err(Error::invalid("generating vector must have d >= 1 entries"));
        }
        if let Some((j, zj)) = z.iter().enumerate().find(|(_, &zj)| zj == 0 || zj >= n) {
            return Err(Error::invalid(format!(
                "z_{} = {zj} is outside 1..={}",
                j + 1,
                n - 1
            )));
        }
        Ok(Self { n, z })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn z(&self) -> &[u64] {
        &self.z
    }

    pub fn d(&self) -> usize {
        self.z.len()
    }

    /// The rule generated by the first `d` components of `z`.
    pub fn prefix(&self, d: usize) -> Result<Self> {
        if d == 0 || d > self.z.len() {
            return Err(Error::invalid(format!(
                "prefix length {d} outside 1..={}",
                self.z.len()
            )));
        }
        Ok(Self {
            n: self.n,
            z: self.z[..d].to_vec(),
        })
    }

    /// `{i z_j / N}` for point index `i`, computed from the integer residue.
    pub(crate) fn coordinate(&self, i: u64, j: usize) -> f64 {
        residue(i, self.z[j], self.n) as f64 / self.n as f64
    }
}

pub(crate) fn residue(i: u64, z: u64, n: u64) -> u64 {
    ((i as u128 * z as u128) % n as u128) as u64
}

/// Concatenated rule: lattice coordinates `1..d`, i.i.d. uniform coordinates `d+1..s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcatRuleSpec {
    lattice: LatticeRule,
    s: usize,
    seed: u64,
}

impl ConcatRuleSpec {
    pub fn new(lattice: LatticeRule, s: usize, seed: u64) -> Result<Self> {
        if s <= lattice.d() {
            return Err(Error::invalid(format!(
                "concatenated rule needs s > d, got s = {s}, d = {}",
                lattice.d()
            )));
        }
        Ok(Self { lattice, s, seed })
    }

    pub fn lattice(&self) -> &LatticeRule {
        &self.lattice
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Truncation rule: lattice coordinates `1..d`, coordinates `d+1..s` frozen at an anchor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedRuleSpec {
    lattice: LatticeRule,
    s: usize,
    anchor: Vec<f64>,
}

impl TruncatedRuleSpec {
    pub fn new(lattice: LatticeRule, s: usize, anchor: Vec<f64>) -> Result<Self> {
        let d = lattice.d();
        if s <= d {
            return Err(Error::invalid(format!(
                "truncation rule needs s > d, got s = {s}, d = {d}"
            )));
        }
        if anchor.len() != s - d {
            return Err(Error::invalid(format!(
                "anchor must have s - d = {} entries, got {}",
                s - d,
                anchor.len()
            )));
        }
        if let Some(c) = anchor.iter().find(|c| !(0.0..1.0).contains(*c)) {
            return Err(Error::invalid(format!("anchor entry {c} outside [0, 1)")));
        }
        Ok(Self { lattice, s, anchor })
    }

    pub fn lattice(&self) -> &LatticeRule {
        &self.lattice
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn anchor(&self) -> &[f64] {
        &self.anchor
    }
}

/// The `N` points `({i z_1/N}, …, {i z_d/N})`, `i = 0..N-1`.
pub fn lattice_points(rule: &LatticeRule) -> PointSet {
    let d = rule.d();
    let mut coords = Vec::with_capacity(rule.n as usize * d);
    for i in 0..rule.n {
        coords.extend((0..d).map(|j| rule.coordinate(i, j)));
    }
    PointSet { dim: d, coords }
}

fn replication_rng(seed: u64, replication: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication);
    rng
}

/// The uniform coordinate `x_{i,j}` (0-based point `i`, 1-based coordinate
/// `j > d`) of replication `replication`.
///
/// Every draw has a fixed position in the ChaCha stream selected by
/// `(seed, replication)`, so any single coordinate can be regenerated on its own.
pub fn random_coordinate(spec: &ConcatRuleSpec, replication: u64, i: u64, j: usize) -> f64 {
    let d = spec.lattice.d();
    assert!(j > d && j <= spec.s, "coordinate {j} is not a random coordinate");
    let width = (spec.s - d) as u128;
    let mut rng = replication_rng(spec.seed, replication);
    // each f64 consumes one u64, i.e. two 32-bit words
    rng.set_word_pos(2 * (i as u128 * width + (j - d - 1) as u128));
    rng.gen::<f64>()
}

/// The concatenated point set for one replication.
pub fn concat_points(spec: &ConcatRuleSpec, replication: u64) -> PointSet {
    let rule = &spec.lattice;
    let d = rule.d();
    let mut rng = replication_rng(spec.seed, replication);
    let mut coords = Vec::with_capacity(rule.n as usize * spec.s);
    for i in 0..rule.n {
        coords.extend((0..d).map(|j| rule.coordinate(i, j)));
        coords.extend((d..spec.s).map(|_| rng.gen::<f64>()));
    }
    PointSet {
        dim: spec.s,
        coords,
    }
}

/// The truncation-rule point set: lattice coordinates followed by the anchor.
pub fn truncated_points(spec: &TruncatedRuleSpec) -> PointSet {
    let rule = &spec.lattice;
    let d = rule.d();
    let mut coords = Vec::with_capacity(rule.n as usize * spec.s);
    for i in 0..rule.n {
        coords.extend((0..d).map(|j| rule.coordinate(i, j)));
        coords.extend_from_slice(&spec.anchor);
    }
    PointSet {
        dim: spec.s,
        coords,
    }
}

/// Whether `h · z ≡ 0 (mod N)`.
pub fn is_dual(h: &[i64], rule: &LatticeRule) -> Result<bool> {
    check_frequency_len(h, rule)?;
    let n = rule.n as i128;
    let dot = h
        .iter()
        .zip(&rule.z)
        .fold(0i128, |acc, (&hj, &zj)| (acc + hj as i128 * zj as i128).rem_euclid(n));
    Ok(dot == 0)
}

/// `(1/N) Σ_{x∈P} exp(2πi h·x)`, summed over the floating-point lattice points.
pub fn character_sum(h: &[i64], rule: &LatticeRule) -> Result<Complex64> {
    check_frequency_len(h, rule)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..rule.n {
        let phase: f64 = h
            .iter()
            .enumerate()
            .map(|(j, &hj)| hj as f64 * rule.coordinate(i, j))
            .sum();
        acc += Complex64::from_polar(1.0, 2.0 * PI * phase);
    }
    Ok(acc / rule.n as f64)
}

fn check_frequency_len(h: &[i64], rule: &LatticeRule) -> Result<()> {
    if h.len() != rule.d() {
        return Err(Error::invalid(format!(
            "frequency vector has length {}, lattice has d = {}",
            h.len(),
            rule.d()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rule(n: u64, z: &[u64]) -> LatticeRule {
        LatticeRule::new(n, z.to_vec()).unwrap()
    }

    #[test]
    fn rule_validation() {
        assert!(LatticeRule::new(1, vec![1]).is_err());
        assert!(LatticeRule::new(5, vec![]).is_err());
        assert!(LatticeRule::new(5, vec![0]).is_err());
        assert!(LatticeRule::new(5, vec![1, 5]).is_err());
        // z need not be coprime to N
        assert!(LatticeRule::new(6, vec![1, 3]).is_ok());
    }

    #[test]
    fn lattice_point_fixtures() {
        let p = lattice_points(&rule(4, &[1]));
        assert_eq!(p.iter().map(|x| x[0]).collect::<Vec<_>>(), vec![0.0, 0.25, 0.5, 0.75]);

        let p = lattice_points(&rule(5, &[1, 2]));
        assert_eq!(p.len(), 5);
        for (n, x) in p.iter().enumerate() {
            assert_eq!(x[0], (n % 5) as f64 / 5.0);
            assert_eq!(x[1], ((2 * n) % 5) as f64 / 5.0);
        }

        let p = lattice_points(&rule(8, &[1, 5]));
        assert_eq!(p.point(3), &[0.375, 0.875]);
    }

    #[test]
    fn truncated_point_fixtures() {
        let spec = TruncatedRuleSpec::new(rule(2, &[1]), 2, vec![0.7]).unwrap();
        let p = truncated_points(&spec);
        assert_eq!(p.point(0), &[0.0, 0.7]);
        assert_eq!(p.point(1), &[0.5, 0.7]);

        let r = rule(16, &[1, 7]);
        let spec = TruncatedRuleSpec::new(r.clone(), 5, vec![0.0; 3]).unwrap();
        let p = truncated_points(&spec);
        assert_eq!(p.project(0..2), lattice_points(&r));
        assert!(p.iter().all(|x| x[2..].iter().all(|&c| c == 0.0)));

        assert!(TruncatedRuleSpec::new(r.clone(), 2, vec![]).is_err());
        assert!(TruncatedRuleSpec::new(r.clone(), 4, vec![0.1]).is_err());
        assert!(TruncatedRuleSpec::new(r, 3, vec![1.0]).is_err());
    }

    #[test]
    fn concat_points_structure() {
        let r = rule(16, &[1, 5, 7]);
        let spec = ConcatRuleSpec::new(r.clone(), 6, 42).unwrap();
        let a = concat_points(&spec, 3);
        assert_eq!(a.len(), 16);
        assert_eq!(a.dim(), 6);
        assert_eq!(a.project(0..3), lattice_points(&r));
        assert!(a.iter().flatten().all(|v| (0.0..1.0).contains(v)));

        let b = concat_points(&spec, 3);
        assert!(a.iter().flatten().zip(b.iter().flatten()).all(|(x, y)| x.to_bits() == y.to_bits()));
        assert_ne!(a, concat_points(&spec, 4));
        let other_seed = ConcatRuleSpec::new(r.clone(), 6, 43).unwrap();
        assert_ne!(a, concat_points(&other_seed, 3));
        assert!(ConcatRuleSpec::new(r, 3, 0).is_err());
    }

    #[test]
    fn random_coordinates_are_addressable() {
        let spec = ConcatRuleSpec::new(rule(8, &[1, 3]), 5, 9).unwrap();
        let pts = concat_points(&spec, 11);
        for i in 0..8u64 {
            for j in 3..=5 {
                let v = random_coordinate(&spec, 11, i, j);
                assert_eq!(v.to_bits(), pts.point(i as usize)[j - 1].to_bits());
            }
        }
    }

    #[test]
    fn random_coordinate_means() {
        // per-coordinate sample mean over R replications of N points
        let n = 8u64;
        let spec = ConcatRuleSpec::new(rule(n, &[1]), 3, 2024).unwrap();
        let reps = 10_000u64;
        let mut sums = [0.0f64; 2];
        for r in 0..reps {
            let p = concat_points(&spec, r);
            for x in p.iter() {
                sums[0] += x[1];
                sums[1] += x[2];
            }
        }
        let count = (reps * n) as f64;
        let tol = 3.0 * (1.0 / 12f64.sqrt()) / count.sqrt();
        for s in sums {
            assert!((s / count - 0.5).abs() <= tol, "mean {}", s / count);
        }
    }

    #[test]
    fn dual_membership() {
        let r = rule(4, &[1, 2]);
        assert!(is_dual(&[0, 0], &r).unwrap());
        assert!(is_dual(&[2, 1], &r).unwrap());
        assert!(!is_dual(&[1, 0], &r).unwrap());
        assert!(is_dual(&[-2, -1], &r).unwrap());
        assert!(is_dual(&[1], &r).is_err());
    }

    #[test]
    fn character_sum_fixtures() {
        let r = rule(4, &[1, 2]);
        let one = character_sum(&[0, 0], &r).unwrap();
        assert!((one - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        let dual = character_sum(&[2, 1], &r).unwrap();
        assert!((dual - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        let off = character_sum(&[1, 0], &r).unwrap();
        assert!(off.norm() < 1e-12);
    }

    #[test]
    fn lattice_is_a_group() {
        for n in 2..=16u64 {
            for z1 in 1..n {
                let r = rule(n, &[1, z1]);
                let pts = lattice_points(&r);
                let members: std::collections::HashSet<(u64, u64)> = pts
                    .iter()
                    .map(|x| ((x[0] * n as f64).round() as u64, (x[1] * n as f64).round() as u64))
                    .collect();
                for a in &members {
                    for b in &members {
                        let sum = ((a.0 + b.0) % n, (a.1 + b.1) % n);
                        assert!(members.contains(&sum), "N={n} z=(1,{z1})");
                    }
                }
            }
        }
    }

    #[test]
    fn csv_export_has_17_digits() {
        let p = lattice_points(&rule(3, &[1, 2]));
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        let second: Vec<f64> = lines[1].split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(second, vec![1.0 / 3.0, 2.0 / 3.0]);
        assert!(lines[1].starts_with("3.3333333333333331e-1"));
    }
}
