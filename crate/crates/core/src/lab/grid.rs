use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::targets::ToyTarget;
use super::LabError;
use crate::flows::FlowModel;
use crate::numcore::Matrix;

pub const MAX_RESOLUTION: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Bounds {
    pub fn square(half_width: f64) -> Self {
        Self {
            x_min: -half_width,
            x_max: half_width,
            y_min: -half_width,
            y_max: half_width,
        }
    }

    fn validate(&self) -> Result<(), LabError> {
        let ok = [self.x_min, self.x_max, self.y_min, self.y_max]
            .iter()
            .all(|v| v.is_finite())
            && self.x_min < self.x_max
            && self.y_min < self.y_max;
        if ok {
            Ok(())
        } else {
            Err(LabError::InvalidInput(format!("invalid bounds {self:?}")))
        }
    }
}

fn check_resolution(nx: usize, ny: usize) -> Result<(), LabError> {
    if nx == 0 || ny == 0 || nx > MAX_RESOLUTION || ny > MAX_RESOLUTION {
        return Err(LabError::InvalidInput(format!(
            "grid resolution {nx}x{ny} outside 1..={MAX_RESOLUTION}"
        )));
    }
    Ok(())
}

/// Log-density values at cell centers. Row `i` is the `i`-th cell from
/// `y_min`, column `j` the `j`-th from `x_min`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub bounds: Bounds,
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
}

impl DensityGrid {
    pub fn cell_width(&self) -> (f64, f64) {
        (
            (self.bounds.x_max - self.bounds.x_min) / self.nx as f64,
            (self.bounds.y_max - self.bounds.y_min) / self.ny as f64,
        )
    }

    pub fn center(&self, i: usize, j: usize) -> [f64; 2] {
        let (dx, dy) = self.cell_width();
        [
            self.bounds.x_min + (j as f64 + 0.5) * dx,
            self.bounds.y_min + (i as f64 + 0.5) * dy,
        ]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.nx + j]
    }

    /// Riemann sum of the density over the grid.
    pub fn mass(&self) -> f64 {
        let (dx, dy) = self.cell_width();
        self.values.iter().map(|v| v.exp()).sum::<f64>() * dx * dy
    }

    /// `(i, j)` of every cell that is a strict local maximum among its eight
    /// neighbours and exceeds `threshold`.
    pub fn local_maxima(&self, threshold: f64) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.ny {
            for j in 0..self.nx {
                let v = self.get(i, j);
                if v <= threshold {
                    continue;
                }
                let mut is_max = true;
                for di in -1i64..=1 {
                    for dj in -1i64..=1 {
                        let (a, b) = (i as i64 + di, j as i64 + dj);
                        if (di, dj) == (0, 0) || a < 0 || b < 0 {
                            continue;
                        }
                        let (a, b) = (a as usize, b as usize);
                        if a < self.ny && b < self.nx && self.get(a, b) >= v {
                            is_max = false;
                        }
                    }
                }
                if is_max {
                    out.push((i, j));
                }
            }
        }
        out
    }

    fn centers(&self) -> Matrix {
        let mut m = Matrix::zeros(self.nx * self.ny, 2);
        for i in 0..self.ny {
            for j in 0..self.nx {
                m.row_mut(i * self.nx + j).copy_from_slice(&self.center(i, j));
            }
        }
        m
    }

    /// CSV: a header line, the resolution and bounds, then one line per row.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "nx,ny,x_min,x_max,y_min,y_max")?;
        let b = &self.bounds;
        writeln!(w, "{},{},{},{},{},{}", self.nx, self.ny, b.x_min, b.x_max, b.y_min, b.y_max)?;
        for row in self.values.chunks(self.nx) {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self, LabError> {
        let bad = |m: &str| LabError::InvalidInput(format!("grid csv: {m}"));
        let mut lines = r.lines();
        let mut next = || -> Result<Option<String>, LabError> {
            lines.next().transpose().map_err(|e| bad(&e.to_string()))
        };
        next()?.ok_or_else(|| bad("missing header"))?;
        let meta = next()?.ok_or_else(|| bad("missing resolution line"))?;
        let f: Vec<&str> = meta.split(',').collect();
        if f.len() != 6 {
            return Err(bad("resolution line needs 6 fields"));
        }
        let nx: usize = f[0].parse().map_err(|_| bad("nx"))?;
        let ny: usize = f[1].parse().map_err(|_| bad("ny"))?;
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad("bounds"));
        let bounds = Bounds {
            x_min: num(f[2])?,
            x_max: num(f[3])?,
            y_min: num(f[4])?,
            y_max: num(f[5])?,
        };
        let mut values = Vec::with_capacity(nx * ny);
        while let Some(line) = next()? {
            for v in line.split(',') {
                values.push(v.parse::<f64>().map_err(|_| bad("value"))?);
            }
        }
        if values.len() != nx * ny {
            return Err(bad("value count does not match resolution"));
        }
        Ok(Self {
            bounds,
            nx,
            ny,
            values,
        })
    }

    /// Binary 8-bit greyscale (P5). Finite values map linearly from their
    /// minimum (0) to maximum (255); `-inf` maps to 0. The first image row
    /// is the top of the plot, i.e. the largest `y`.
    pub fn write_pgm<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let finite = self.values.iter().copied().filter(|v| v.is_finite());
        let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(v), b.max(v))
        });
        write!(w, "P5\n{} {}\n255\n", self.nx, self.ny)?;
        let mut bytes = Vec::with_capacity(self.nx * self.ny);
        for i in (0..self.ny).rev() {
            for j in 0..self.nx {
                let v = self.get(i, j);
                let b = if !v.is_finite() || hi <= lo {
                    0
                } else {
                    ((v - lo) / (hi - lo) * 255.0).round() as u8
                };
                bytes.push(b);
            }
        }
        w.write_all(&bytes)
    }
}

/// Log-density of a 2D model at the centers of an `nx × ny` grid.
pub fn density_grid_model(
    model: &FlowModel,
    bounds: Bounds,
    nx: usize,
    ny: usize,
) -> Result<DensityGrid, LabError> {
    if model.dim() != 2 {
        return Err(LabError::InvalidInput(format!(
            "density grids need a 2D model, got dimension {}",
            model.dim()
        )));
    }
    bounds.validate()?;
    check_resolution(nx, ny)?;
    let mut grid = DensityGrid {
        bounds,
        nx,
        ny,
        values: Vec::new(),
    };
    grid.values = model.log_prob_batch(&grid.centers())?;
    Ok(grid)
}

pub fn density_grid_target(
    target: &ToyTarget,
    bounds: Bounds,
    nx: usize,
    ny: usize,
) -> Result<DensityGrid, LabError> {
    bounds.validate()?;
    check_resolution(nx, ny)?;
    let mut grid = DensityGrid {
        bounds,
        nx,
        ny,
        values: Vec::new(),
    };
    let centers = grid.centers();
    grid.values = (0..centers.rows())
        .map(|r| target.log_density(centers.row(r)))
        .collect::<Option<Vec<f64>>>()
        .ok_or_else(|| {
            LabError::InvalidInput(format!("{target} has no closed-form density"))
        })?;
    Ok(grid)
}

/// Sample counts on a regular grid; samples outside the bounds are clamped
/// into the edge cells so the counts always sum to the sample count.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram2d {
    pub bounds: Bounds,
    pub nx: usize,
    pub ny: usize,
    pub counts: Vec<u64>,
}

impl Histogram2d {
    pub fn from_samples(
        samples: &Matrix,
        bounds: Bounds,
        nx: usize,
        ny: usize,
    ) -> Result<Self, LabError> {
        if samples.cols() != 2 {
            return Err(LabError::InvalidInput("histogram needs 2D samples".into()));
        }
        bounds.validate()?;
        check_resolution(nx, ny)?;
        let mut counts = vec![0u64; nx * ny];
        let cell = |v: f64, lo: f64, hi: f64, n: usize| {
            let t = ((v - lo) / (hi - lo) * n as f64).floor();
            (t.max(0.0) as usize).min(n - 1)
        };
        for r in 0..samples.rows() {
            let p = samples.row(r);
            let j = cell(p[0], bounds.x_min, bounds.x_max, nx);
            let i = cell(p[1], bounds.y_min, bounds.y_max, ny);
            counts[i * nx + j] += 1;
        }
        Ok(Self {
            bounds,
            nx,
            ny,
            counts,
        })
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn masses(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64).collect()
    }

    /// Empirical log-density per cell, as a grid for rendering.
    pub fn to_log_density(&self) -> DensityGrid {
        let area = (self.bounds.x_max - self.bounds.x_min) * (self.bounds.y_max - self.bounds.y_min)
            / (self.nx * self.ny) as f64;
        let n = self.total().max(1) as f64;
        DensityGrid {
            bounds: self.bounds,
            nx: self.nx,
            ny: self.ny,
            values: self.counts.iter().map(|&c| (c as f64 / (n * area)).ln()).collect(),
        }
    }
}
