use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Read, Write};

use crate::error::{Error, Result};
use crate::sphere::{Chart, SpherePoint};

/// Compensated (Neumaier) sum in iteration order.
pub fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub point: SpherePoint,
    pub weight: f64,
}

/// How a cloud was generated.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CloudMeta {
    pub seed: u64,
    /// Transport depth.
    pub n: usize,
    /// Hash of the correspondence that produced the cloud, empty if none.
    pub hash: String,
    /// Some step sampled branches instead of expanding the full tree.
    pub monte_carlo: bool,
}

/// A finite atomic probability measure on the sphere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointCloudMeasure {
    pub atoms: Vec<Atom>,
    pub meta: CloudMeta,
}

const MAGIC: &str = "corrdyn-cloud 1";
const MASS_TOL: f64 = 1e-12;

impl PointCloudMeasure {
    /// Checks that weights are nonnegative and sum to one, and stores every
    /// point in its canonical chart.
    pub fn new(atoms: Vec<Atom>, meta: CloudMeta) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::ZeroMass);
        }
        if atoms.iter().any(|a| !(a.weight >= 0.0) || !a.point.coord.is_finite()) {
            return Err(Error::InvalidInput("negative or non-finite atom".into()));
        }
        let atoms: Vec<Atom> = atoms
            .into_iter()
            .map(|a| Atom {
                point: SpherePoint::in_chart(a.point.chart, a.point.coord),
                weight: a.weight,
            })
            .collect();
        let cloud = Self { atoms, meta };
        let mass = cloud.total_mass();
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidInput(format!("total mass {mass} is not 1")));
        }
        Ok(cloud)
    }

    /// Rescales nonnegative weights to total mass one.
    pub fn normalized(atoms: Vec<Atom>, meta: CloudMeta) -> Result<Self> {
        let mass = neumaier_sum(atoms.iter().map(|a| a.weight));
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::ZeroMass);
        }
        let atoms = atoms
            .into_iter()
            .map(|a| Atom {
                point: a.point,
                weight: a.weight / mass,
            })
            .collect();
        Self::new(atoms, meta)
    }

    pub fn dirac(p: SpherePoint) -> Self {
        Self {
            atoms: vec![Atom { point: SpherePoint::in_chart(p.chart, p.coord), weight: 1.0 }],
            meta: CloudMeta::default(),
        }
    }

    /// Equal weights on the given points.
    pub fn uniform(points: &[SpherePoint]) -> Result<Self> {
        let w = 1.0 / points.len() as f64;
        Self::normalized(points.iter().map(|&point| Atom { point, weight: w }).collect(), CloudMeta::default())
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        neumaier_sum(self.atoms.iter().map(|a| a.weight))
    }

    /// `t μ + (1 - t) ν` as the union of the two atom lists.
    pub fn mixture(&self, t: f64, other: &PointCloudMeasure) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidInput(format!("mixture weight {t} outside [0, 1]")));
        }
        let atoms = self
            .atoms
            .iter()
            .map(|a| Atom { point: a.point, weight: t * a.weight })
            .chain(other.atoms.iter().map(|a| Atom { point: a.point, weight: (1.0 - t) * a.weight }))
            .collect();
        Ok(Self { atoms, meta: CloudMeta::default() })
    }

    /// Mass within chordal distance `r` of `p`.
    pub fn mass_near(&self, p: &SpherePoint, r: f64) -> f64 {
        neumaier_sum(self.atoms.iter().filter(|a| a.point.chordal(p) <= r).map(|a| a.weight))
    }

    /// Text header followed by little-endian columns (chart, re, im, weight).
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "{MAGIC}")?;
        writeln!(w, "count {}", self.atoms.len())?;
        writeln!(w, "seed {}", self.meta.seed)?;
        writeln!(w, "n {}", self.meta.n)?;
        writeln!(w, "hash {}", if self.meta.hash.is_empty() { "-" } else { &self.meta.hash })?;
        writeln!(w, "monte_carlo {}", self.meta.monte_carlo)?;
        writeln!(w, "end")?;
        let mut buf = Vec::with_capacity(self.atoms.len() * 25);
        buf.extend(self.atoms.iter().map(|a| a.point.chart.id()));
        for a in &self.atoms {
            buf.extend_from_slice(&a.point.coord.re.to_le_bytes());
        }
        for a in &self.atoms {
            buf.extend_from_slice(&a.point.coord.im.to_le_bytes());
        }
        for a in &self.atoms {
            buf.extend_from_slice(&a.weight.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from(r: impl Read) -> Result<Self> {
        let mut r = std::io::BufReader::new(r);
        let mut line = String::new();
        let mut next_line = |r: &mut std::io::BufReader<_>| -> Result<String> {
            line.clear();
            if r.read_line(&mut line)? == 0 {
                return Err(Error::Format("truncated header".into()));
            }
            Ok(line.trim_end().to_string())
        };
        if next_line(&mut r)? != MAGIC {
            return Err(Error::Format("not a corrdyn cloud file".into()));
        }
        let mut count = None;
        let mut meta = CloudMeta::default();
        loop {
            let l = next_line(&mut r)?;
            if l == "end" {
                break;
            }
            let (key, value) = l
                .split_once(' ')
                .ok_or_else(|| Error::Format(format!("bad header line {l:?}")))?;
            let bad = |_| Error::Format(format!("bad value in header line {l:?}"));
            match key {
                "count" => count = Some(value.parse::<usize>().map_err(bad)?),
                "seed" => meta.seed = value.parse().map_err(|_| Error::Format(format!("bad seed {value:?}")))?,
                "n" => meta.n = value.parse().map_err(|_| Error::Format(format!("bad n {value:?}")))?,
                "hash" => meta.hash = if value == "-" { String::new() } else { value.to_string() },
                "monte_carlo" => {
                    meta.monte_carlo = value.parse().map_err(|_| Error::Format(format!("bad flag {value:?}")))?
                }
                _ => return Err(Error::Format(format!("unknown header key {key:?}"))),
            }
        }
        let count = count.ok_or_else(|| Error::Format("missing count".into()))?;
        let mut charts = vec![0u8; count];
        r.read_exact(&mut charts)?;
        let column = |r: &mut std::io::BufReader<_>| -> Result<Vec<f64>> {
            let mut bytes = vec![0u8; count * 8];
            r.read_exact(&mut bytes)?;
            Ok(bytes
                .chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
                .collect())
        };
        let re = column(&mut r)?;
        let im = column(&mut r)?;
        let weight = column(&mut r)?;
        let atoms = (0..count)
            .map(|i| {
                let chart = Chart::from_id(charts[i]).ok_or_else(|| Error::Format(format!("bad chart id {}", charts[i])))?;
                Ok(Atom {
                    point: SpherePoint { chart, coord: Complex64::new(re[i], im[i]) },
                    weight: weight[i],
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { atoms, meta })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let v = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(neumaier_sum(v), 2.0);
    }

    #[test]
    fn binary_round_trip() {
        let atoms = vec![
            Atom { point: SpherePoint::from_re_im(0.25, -0.5), weight: 0.5 },
            Atom { point: SpherePoint::INFINITY, weight: 0.25 },
            Atom { point: SpherePoint::from_re_im(3.0, 1.0), weight: 0.25 },
        ];
        let meta = CloudMeta { seed: 7, n: 3, hash: "abc".into(), monte_carlo: true };
        let c = PointCloudMeasure::new(atoms, meta).unwrap();
        let mut bytes = Vec::new();
        c.write_to(&mut bytes).unwrap();
        let back = PointCloudMeasure::read_from(&bytes[..]).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.atoms[2].point.chart, Chart::Infinity);
    }

    #[test]
    fn mass_is_validated() {
        let atoms = vec![Atom { point: SpherePoint::ZERO, weight: 0.5 }];
        assert!(PointCloudMeasure::new(atoms.clone(), CloudMeta::default()).is_err());
        let c = PointCloudMeasure::normalized(atoms, CloudMeta::default()).unwrap();
        assert_eq!(c.total_mass(), 1.0);
        assert!(matches!(PointCloudMeasure::new(Vec::new(), CloudMeta::default()), Err(Error::ZeroMass)));
    }
}
