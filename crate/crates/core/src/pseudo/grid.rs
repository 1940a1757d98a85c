use std::io::{self, Write};

use super::model::PseudoModel;
use crate::error::{Error, Result};
use crate::surface::Vec3;

/// Axis-aligned sampling region in the `z = const` plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridRegion {
    pub x: (f64, f64),
    pub y: (f64, f64),
    pub z: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridRegion {
    fn axis(range: (f64, f64), n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![range.0];
        }
        (0..n)
            .map(|i| range.0 + (range.1 - range.0) * i as f64 / (n - 1) as f64)
            .collect()
    }

    pub fn points(&self) -> Result<Vec<Vec3>> {
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::Validation(
                "grid resolution must be at least 1".into(),
            ));
        }
        let xs = Self::axis(self.x, self.nx);
        let ys = Self::axis(self.y, self.ny);
        Ok(ys
            .iter()
            .flat_map(|&y| xs.iter().map(move |&x| Vec3::new(x, y, self.z)))
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSample {
    pub point: Vec3,
    pub value_ev: f64,
}

pub fn sample_grid(model: &PseudoModel, region: &GridRegion) -> Result<Vec<GridSample>> {
    region
        .points()?
        .into_iter()
        .map(|p| {
            Ok(GridSample {
                point: p,
                value_ev: model.pseudopotential_ev(&p)?,
            })
        })
        .collect()
}

/// Comma-separated table `x,y,z,value_ev` (lengths in metres). Annotated
/// points such as the null and saddle are written as leading `#` lines.
pub fn write_grid_csv<W: Write>(
    mut w: W,
    samples: &[GridSample],
    annotations: &[(&str, Vec3)],
) -> io::Result<()> {
    for (name, p) in annotations {
        writeln!(w, "# {name},{:e},{:e},{:e}", p.x, p.y, p.z)?;
    }
    writeln!(w, "x,y,z,value_ev")?;
    for s in samples {
        writeln!(
            w,
            "{:e},{:e},{:e},{:e}",
            s.point.x, s.point.y, s.point.z, s.value_ev
        )?;
    }
    Ok(())
}
