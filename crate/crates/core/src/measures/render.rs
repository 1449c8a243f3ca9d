use std::io::Write;

use super::cloud::PointCloudMeasure;
use crate::error::{Error, Result};

pub const MAX_RESOLUTION: usize = 4096;

/// A 16-bit grayscale image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u16>,
}

impl Raster {
    pub fn get(&self, row: usize, col: usize) -> u16 {
        self.pixels[row * self.width + col]
    }

    /// Binary PGM, maxval 65535, big-endian samples.
    pub fn write_pgm(&self, mut w: impl Write) -> Result<()> {
        write!(w, "P5\n{} {}\n65535\n", self.width, self.height)?;
        let bytes: Vec<u8> = self.pixels.iter().flat_map(|p| p.to_be_bytes()).collect();
        w.write_all(&bytes)?;
        Ok(())
    }
}

/// Panel position of a chart coordinate with `|c| ≤ 1` under the Lambert
/// azimuthal equal-area projection of its hemisphere onto the unit disk.
fn lambert(c: num_complex::Complex64) -> (f64, f64) {
    let r = c.norm();
    if r == 0.0 {
        return (0.0, 0.0);
    }
    // |c| = tan(θ/2) and the Lambert radius 2 sin(θ/2) reaches √2 on the equator
    let rho = std::f64::consts::SQRT_2 * r / (1.0 + r * r).sqrt();
    (c.re / r * rho, c.im / r * rho)
}

fn gaussian_kernel(bandwidth: f64) -> Vec<f64> {
    if bandwidth <= 0.0 {
        return vec![1.0];
    }
    let half = (3.0 * bandwidth).ceil() as i64;
    (-half..=half).map(|k| (-(k * k) as f64 / (2.0 * bandwidth * bandwidth)).exp()).collect()
}

/// Separable convolution restricted to the disk mask, renormalized by the
/// kernel mass that falls inside it.
fn smooth(values: &[f64], mask: &[bool], res: usize, kernel: &[f64]) -> Vec<f64> {
    let half = (kernel.len() / 2) as i64;
    let pass = |src: &[f64], weight: &[f64], horizontal: bool| -> (Vec<f64>, Vec<f64>) {
        let mut out = vec![0.0; src.len()];
        let mut wout = vec![0.0; src.len()];
        for i in 0..res {
            for j in 0..res {
                let (mut s, mut w) = (0.0, 0.0);
                for (t, k) in kernel.iter().enumerate() {
                    let o = t as i64 - half;
                    let (ii, jj) = if horizontal { (i as i64, j as i64 + o) } else { (i as i64 + o, j as i64) };
                    if ii < 0 || jj < 0 || ii >= res as i64 || jj >= res as i64 {
                        continue;
                    }
                    let idx = ii as usize * res + jj as usize;
                    s += k * src[idx];
                    w += k * weight[idx];
                }
                out[i * res + j] = s;
                wout[i * res + j] = w;
            }
        }
        (out, wout)
    };
    let ones: Vec<f64> = mask.iter().map(|m| if *m { 1.0 } else { 0.0 }).collect();
    let (h, wh) = pass(values, &ones, true);
    let (v, wv) = pass(&h, &wh, false);
    v.iter()
        .zip(&wv)
        .zip(mask)
        .map(|((s, w), m)| if *m && *w > 0.0 { s / w } else { 0.0 })
        .collect()
}

/// Log-scaled, kernel-smoothed density image of `μ`: the `|z| ≤ 1` and
/// `|w| ≤ 1` hemispheres side by side, each a `resolution²` panel under an
/// equal-area projection. `bandwidth` is the Gaussian width in pixels.
pub fn render_density(mu: &PointCloudMeasure, resolution: usize, bandwidth: f64) -> Result<Raster> {
    if resolution == 0 || resolution > MAX_RESOLUTION {
        return Err(Error::InvalidInput(format!("resolution must be in 1..={MAX_RESOLUTION}")));
    }
    if !(bandwidth >= 0.0) {
        return Err(Error::InvalidInput("bandwidth must be nonnegative".into()));
    }
    let res = resolution;
    let mask: Vec<bool> = (0..res * res)
        .map(|k| {
            let (i, j) = (k / res, k % res);
            let x = (j as f64 + 0.5) / res as f64 * 2.0 - 1.0;
            let y = (i as f64 + 0.5) / res as f64 * 2.0 - 1.0;
            x * x + y * y <= 1.0
        })
        .collect();
    let mut hist = [vec![0.0; res * res], vec![0.0; res * res]];
    for a in &mu.atoms {
        let panel = a.point.chart.id() as usize;
        let (x, y) = lambert(a.point.coord);
        let j = (((x + 1.0) / 2.0 * res as f64) as usize).min(res - 1);
        let i = (((1.0 - y) / 2.0 * res as f64) as usize).min(res - 1);
        hist[panel][i * res + j] += a.weight;
    }
    let kernel = gaussian_kernel(bandwidth);
    let smoothed: Vec<Vec<f64>> = hist.iter().map(|h| smooth(h, &mask, res, &kernel)).collect();
    let peak = smoothed.iter().flatten().cloned().fold(0.0, f64::max);
    let mut pixels = vec![0u16; 2 * res * res];
    if peak > 0.0 {
        let floor = peak * 1e-6;
        let top = (1.0 + peak / floor).ln();
        for (panel, img) in smoothed.iter().enumerate() {
            for i in 0..res {
                for j in 0..res {
                    let v = img[i * res + j];
                    let level = (1.0 + v / floor).ln() / top;
                    pixels[i * 2 * res + panel * res + j] = (level * 65535.0).round() as u16;
                }
            }
        }
    }
    Ok(Raster { width: 2 * res, height: res, pixels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::rng::stream_rng;
    use crate::measures::{Atom, CloudMeta};
    use crate::sphere::SpherePoint;
    use rand::Rng;

    #[test]
    fn dirac_at_the_origin() {
        let r = render_density(&PointCloudMeasure::dirac(SpherePoint::ZERO), 32, 0.0).unwrap();
        let lit: Vec<usize> = (0..r.pixels.len()).filter(|&k| r.pixels[k] > 0).collect();
        assert_eq!(lit.len(), 1);
        let (row, col) = (lit[0] / r.width, lit[0] % r.width);
        assert_eq!((row, col), (16, 16));
        assert_eq!(r.get(row, col), 65535);
    }

    #[test]
    fn uniform_cloud_is_flat() {
        let mut rng = stream_rng(9, 0);
        let n = 400_000;
        let atoms: Vec<Atom> = (0..n)
            .map(|_| {
                let z: f64 = rng.gen_range(-1.0..1.0);
                let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                let s = (1.0 - z * z).sqrt();
                Atom { point: SpherePoint::from_unit_vector([s * t.cos(), s * t.sin(), z]), weight: 1.0 / n as f64 }
            })
            .collect();
        let mu = PointCloudMeasure::normalized(atoms, CloudMeta::default()).unwrap();
        let res = 48;
        let r = render_density(&mu, res, 2.0).unwrap();
        let inside: Vec<u16> = (0..res * res)
            .filter(|k| {
                let (i, j) = (k / res, k % res);
                let x = (j as f64 + 0.5) / res as f64 * 2.0 - 1.0;
                let y = (i as f64 + 0.5) / res as f64 * 2.0 - 1.0;
                x * x + y * y <= 1.0
            })
            .flat_map(|k| [r.pixels[(k / res) * 2 * res + k % res], r.pixels[(k / res) * 2 * res + res + k % res]])
            .collect();
        let max = *inside.iter().max().unwrap() as f64;
        let min = *inside.iter().min().unwrap() as f64;
        assert!(max / min < 1.5, "{max} {min}");
    }

    #[test]
    fn pgm_header() {
        let r = render_density(&PointCloudMeasure::dirac(SpherePoint::INFINITY), 4, 1.0).unwrap();
        let mut out = Vec::new();
        r.write_pgm(&mut out).unwrap();
        assert!(out.starts_with(b"P5\n8 4\n65535\n"));
        assert_eq!(out.len(), 13 + 2 * 32);
    }
}
