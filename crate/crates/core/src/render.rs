//! Deterministic basin rendering: classify a rectangular window of initial
//! conditions pixel by pixel, emit binary PPM images and per-class counts.
//! Parallelism is by scanline into preallocated disjoint rows, so the output
//! bytes never depend on the thread count.

use crate::orbit::{Classifier, OrbitClass, OrbitParams};
use crate::poly::{Complex2, PolyMap2};
use crate::scalar::Real;
use num_complex::Complex;
use rayon::prelude::*;

/// Base colors, shaded by iteration count in `grid_to_ppm`.
pub const COLOR_ORIGIN: [u8; 3] = [255, 215, 0];
pub const COLOR_LINE: [u8; 3] = [0, 0, 255];
pub const COLOR_ESCAPE: [u8; 3] = [220, 40, 40];
pub const COLOR_INDETERMINATE: [u8; 3] = [245, 200, 200];
/// Overlay color marking points near the axis-preimage curves.
pub const COLOR_PREIMAGE: [u8; 3] = [40, 40, 40];
/// Preimage-residual threshold for the overlay.
pub const PREIMAGE_OVERLAY_EPS: f64 = 1e-3;

/// Rectangular window of start points in the real (z, w)-plane, optionally a
/// complex slice at fixed imaginary parts. Pixel (col, row) maps to the cell
/// center, row-major with the top row at the largest w.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window<T: Real> {
    pub center_z: T,
    pub center_w: T,
    /// Full extents (width in z, height in w) of the window.
    pub extent_z: T,
    pub extent_w: T,
    pub width: u32,
    pub height: u32,
    /// Imaginary parts fixed across the slice.
    pub im_z: T,
    pub im_w: T,
}

impl<T: Real> Window<T> {
    pub fn real_plane(center_z: T, center_w: T, extent_z: T, extent_w: T, width: u32, height: u32) -> Self {
        Self { center_z, center_w, extent_z, extent_w, width, height, im_z: T::zero(), im_w: T::zero() }
    }

    /// The square window used by the summary picture of the main example:
    /// [-0.8, 1.6] x [-0.8, 1.6].
    pub fn figure_window(px: u32) -> Self {
        Self::real_plane(T::of(0.4), T::of(0.4), T::of(2.4), T::of(2.4), px, px)
    }

    pub fn valid(&self) -> bool {
        self.width >= 1
            && self.height >= 1
            && self.extent_z > T::zero()
            && self.extent_w > T::zero()
    }

    /// Center of pixel (col, row).
    pub fn pixel_center(&self, col: u32, row: u32) -> Complex2<T> {
        let half = T::of(0.5);
        let fz = (T::of(col as f64) + half) / T::of(self.width as f64);
        let fw = (T::of(row as f64) + half) / T::of(self.height as f64);
        let z = self.center_z - self.extent_z * half + self.extent_z * fz;
        let w = self.center_w + self.extent_w * half - self.extent_w * fw;
        Complex2::new(Complex::new(z, self.im_z), Complex::new(w, self.im_w))
    }

    /// Pixel whose cell contains the given real point (clamped to range).
    pub fn pixel_of(&self, z: T, w: T) -> (u32, u32) {
        let fz = (z - (self.center_z - self.extent_z * T::of(0.5))) / self.extent_z;
        let fw = ((self.center_w + self.extent_w * T::of(0.5)) - w) / self.extent_w;
        let clamp = |f: T, n: u32| -> u32 {
            let v = (f * T::of(n as f64)).floor().to_f64().unwrap_or(0.0) as i64;
            v.clamp(0, n as i64 - 1) as u32
        };
        (clamp(fz, self.width), clamp(fw, self.height))
    }
}

/// Per-pixel classification record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PixelOutcome {
    pub class: PixelClass,
    pub iterations_used: u32,
}

/// Class tag stripped of direction payload, compact for whole-grid storage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PixelClass {
    Origin,
    Line,
    Escape,
    Indeterminate,
}

impl PixelClass {
    pub fn of<T: Real>(class: &OrbitClass<T>) -> Self {
        match class {
            OrbitClass::ConvergesToOrigin { .. } => PixelClass::Origin,
            OrbitClass::ConvergesToLineNotOrigin => PixelClass::Line,
            OrbitClass::Escapes => PixelClass::Escape,
            OrbitClass::Indeterminate => PixelClass::Indeterminate,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PixelClass::Origin => "origin",
            PixelClass::Line => "line",
            PixelClass::Escape => "escape",
            PixelClass::Indeterminate => "indeterminate",
        }
    }

    pub const ALL: [PixelClass; 4] =
        [PixelClass::Origin, PixelClass::Line, PixelClass::Escape, PixelClass::Indeterminate];

    fn base_color(self) -> [u8; 3] {
        match self {
            PixelClass::Origin => COLOR_ORIGIN,
            PixelClass::Line => COLOR_LINE,
            PixelClass::Escape => COLOR_ESCAPE,
            PixelClass::Indeterminate => COLOR_INDETERMINATE,
        }
    }
}

/// Classified window, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct BasinGrid<T: Real> {
    pub window: Window<T>,
    pub max_iter: u32,
    pixels: Vec<PixelOutcome>,
    /// Marked pixels for the optional preimage-curve overlay.
    overlay: Vec<bool>,
}

impl<T: Real> BasinGrid<T> {
    pub fn pixel(&self, col: u32, row: u32) -> PixelOutcome {
        self.pixels[(row * self.window.width + col) as usize]
    }

    pub fn pixels(&self) -> &[PixelOutcome] {
        &self.pixels
    }

    pub fn overlay_marked(&self, col: u32, row: u32) -> bool {
        self.overlay[(row * self.window.width + col) as usize]
    }
}

/// Classify every pixel center of the window. Rows are computed in parallel;
/// the result is independent of scheduling because each pixel's computation
/// is pure and rows are disjoint.
pub fn render_grid<T: Real>(
    map: &PolyMap2<T>,
    window: &Window<T>,
    params: &OrbitParams<T>,
) -> BasinGrid<T> {
    assert!(window.valid(), "window must have positive extent and at least one pixel");
    let classifier = Classifier::new(map, *params).expect("orbit params validated");
    let w = window.width as usize;
    let mut pixels = vec![PixelOutcome { class: PixelClass::Indeterminate, iterations_used: 0 }; w * window.height as usize];
    let mut overlay = vec![false; w * window.height as usize];

    pixels
        .par_chunks_mut(w)
        .zip(overlay.par_chunks_mut(w))
        .enumerate()
        .for_each(|(row, (pixel_row, overlay_row))| {
            for col in 0..window.width {
                let start = window.pixel_center(col, row as u32);
                let out = classifier.classify(start);
                pixel_row[col as usize] =
                    PixelOutcome { class: PixelClass::of(&out.class), iterations_used: out.iterations_used };
                let res = crate::orbit::preimage_residuals(&start);
                overlay_row[col as usize] =
                    res.iter().any(|r| r.to_f64().unwrap_or(f64::MAX) < PREIMAGE_OVERLAY_EPS);
            }
        });

    BasinGrid { window: *window, max_iter: params.max_iter, pixels, overlay }
}

/// Binary PPM (P6) bytes: `P6\n<width> <height>\n255\n` then RGB triples
/// row-major. Channel values are the base class color scaled by
/// s = 0.3 + 0.7 (1 - min(1, iterations/max_iter)), rounded by floor.
/// Bit-exact for identical grids. `overlay` swaps in the preimage-curve color
/// on marked pixels.
pub fn grid_to_ppm<T: Real>(grid: &BasinGrid<T>, overlay: bool) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", grid.window.width, grid.window.height).into_bytes();
    out.reserve(grid.pixels.len() * 3);
    for (i, px) in grid.pixels.iter().enumerate() {
        if overlay && grid.overlay[i] {
            out.extend_from_slice(&COLOR_PREIMAGE);
            continue;
        }
        let frac = (px.iterations_used as f64 / grid.max_iter as f64).min(1.0);
        let shade = 0.3 + 0.7 * (1.0 - frac);
        let base = px.class.base_color();
        for ch in base {
            out.push((ch as f64 * shade).floor() as u8);
        }
    }
    out
}

/// Exact per-class pixel counts and fractions (fractions sum to 1).
#[derive(Debug, Clone, PartialEq)]
pub struct GridStats {
    pub total: u64,
    pub counts: [(PixelClass, u64); 4],
}

impl GridStats {
    pub fn count(&self, class: PixelClass) -> u64 {
        self.counts.iter().find(|(c, _)| *c == class).map(|(_, n)| *n).unwrap_or(0)
    }

    pub fn fraction(&self, class: PixelClass) -> f64 {
        self.count(class) as f64 / self.total as f64
    }

    /// CSV `class,count,fraction`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("class,count,fraction\n");
        for (class, n) in self.counts {
            out.push_str(&format!("{},{},{}\n", class.name(), n, crate::fmt17(n as f64 / self.total as f64)));
        }
        out
    }
}

pub fn grid_stats<T: Real>(grid: &BasinGrid<T>) -> GridStats {
    let mut counts = PixelClass::ALL.map(|c| (c, 0u64));
    for px in &grid.pixels {
        let slot = counts.iter_mut().find(|(c, _)| *c == px.class).expect("all classes enumerated");
        slot.1 += 1;
    }
    GridStats { total: grid.pixels.len() as u64, counts }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::builtin_f;

    #[test]
    fn pixel_centers_row_major_top_largest_w() {
        let win = Window::<f64>::real_plane(0.0, 0.0, 1.0, 1.0, 2, 2);
        let tl = win.pixel_center(0, 0);
        assert!((tl.z.re + 0.25).abs() < 1e-15 && (tl.w.re - 0.25).abs() < 1e-15);
        let br = win.pixel_center(1, 1);
        assert!((br.z.re - 0.25).abs() < 1e-15 && (br.w.re + 0.25).abs() < 1e-15);
        assert_eq!(win.pixel_of(-0.25, 0.25), (0, 0));
        assert_eq!(win.pixel_of(0.25, -0.25), (1, 1));
    }

    #[test]
    fn figure_window_covers_expected_range() {
        let win = Window::<f64>::figure_window(600);
        let tl = win.pixel_center(0, 0);
        let br = win.pixel_center(599, 599);
        assert!(tl.z.re > -0.8 && tl.z.re < -0.79);
        assert!(tl.w.re < 1.6 && tl.w.re > 1.59);
        assert!(br.z.re < 1.6 && br.z.re > 1.59);
        assert!(br.w.re > -0.8 && br.w.re < -0.79);
    }

    #[test]
    fn ppm_header_and_shading() {
        let win = Window::<f64>::real_plane(0.25, 0.25, 0.1, 0.1, 1, 1);
        let f = builtin_f::<f64>();
        let params = OrbitParams::default();
        let grid = render_grid(&f, &win, &params);
        // A diagonal fixed point classifies as line convergence immediately.
        assert_eq!(grid.pixel(0, 0).class, PixelClass::Line);
        let ppm = grid_to_ppm(&grid, false);
        let header = b"P6\n1 1\n255\n";
        assert_eq!(&ppm[..header.len()], header);
        assert_eq!(ppm.len(), header.len() + 3);
    }

    #[test]
    fn shading_formula_endpoints() {
        // iterations 0 -> shade 1.0; iterations = max_iter -> shade 0.3 with floor.
        let win = Window::<f64>::real_plane(0.0, 0.0, 1.0, 1.0, 1, 1);
        let mut grid = BasinGrid {
            window: win,
            max_iter: 1000,
            pixels: vec![PixelOutcome { class: PixelClass::Line, iterations_used: 0 }],
            overlay: vec![false],
        };
        let ppm = grid_to_ppm(&grid, false);
        assert_eq!(&ppm[ppm.len() - 3..], &[0, 0, 255]);
        grid.pixels[0] = PixelOutcome { class: PixelClass::Escape, iterations_used: 1000 };
        let ppm = grid_to_ppm(&grid, false);
        assert_eq!(&ppm[ppm.len() - 3..], &[66, 12, 12]);
    }

    #[test]
    fn stats_fractions_sum_to_one() {
        let f = builtin_f::<f64>();
        let win = Window::<f64>::real_plane(0.4, 0.4, 2.4, 2.4, 16, 16);
        let params = OrbitParams { max_iter: 2000, ..OrbitParams::default() };
        let grid = render_grid(&f, &win, &params);
        let stats = grid_stats(&grid);
        assert_eq!(stats.total, 256);
        let total: u64 = stats.counts.iter().map(|(_, n)| *n).sum();
        assert_eq!(total, 256);
        let fsum: f64 = PixelClass::ALL.iter().map(|&c| stats.fraction(c)).sum();
        assert!((fsum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn all_escape_grid() {
        let f = builtin_f::<f64>();
        // Far corner: everything escapes fast.
        let win = Window::<f64>::real_plane(30.0, 30.0, 1.0, 1.0, 4, 4);
        let params = OrbitParams { max_iter: 100, ..OrbitParams::default() };
        let grid = render_grid(&f, &win, &params);
        let stats = grid_stats(&grid);
        assert_eq!(stats.fraction(PixelClass::Escape), 1.0);
    }

    #[test]
    fn diagonal_pixels_resolve_in_one_iteration() {
        let f = builtin_f::<f64>();
        // Window chosen so some pixel centers satisfy z = w exactly.
        let win = Window::<f64>::real_plane(0.0, 0.0, 1.0, 1.0, 4, 4);
        let params = OrbitParams { max_iter: 1000, ..OrbitParams::default() };
        let grid = render_grid(&f, &win, &params);
        let mut diagonal_pixels = 0;
        for col in 0..4 {
            for row in 0..4 {
                let c = win.pixel_center(col, row);
                if c.z == c.w && c.z.norm() > 1e-9 {
                    diagonal_pixels += 1;
                    assert!(grid.pixel(col, row).iterations_used <= 1);
                    assert_eq!(grid.pixel(col, row).class, PixelClass::Line);
                }
            }
        }
        assert!(diagonal_pixels >= 4, "window should hit the diagonal exactly");
    }

    #[test]
    fn overlay_marks_preimage_curve() {
        let f = builtin_f::<f64>();
        // Pixel centered at (1, 0) lies on {z - w = 1}.
        let win = Window::<f64>::real_plane(1.0, 0.0, 0.01, 0.01, 1, 1);
        let params = OrbitParams { max_iter: 500, ..OrbitParams::default() };
        let grid = render_grid(&f, &win, &params);
        assert!(grid.overlay_marked(0, 0));
        let ppm = grid_to_ppm(&grid, true);
        assert_eq!(&ppm[ppm.len() - 3..], &COLOR_PREIMAGE);
        let plain = grid_to_ppm(&grid, false);
        assert_ne!(&plain[plain.len() - 3..], &COLOR_PREIMAGE);
    }

    #[test]
    fn render_is_thread_count_invariant() {
        let f = builtin_f::<f64>();
        let win = Window::<f64>::real_plane(0.4, 0.4, 2.4, 2.4, 24, 24);
        let params = OrbitParams { max_iter: 500, ..OrbitParams::default() };
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| grid_to_ppm(&render_grid(&f, &win, &params), false));
        let many = rayon::ThreadPoolBuilder::new()
            .num_threads(8)
            .build()
            .unwrap()
            .install(|| grid_to_ppm(&render_grid(&f, &win, &params), false));
        assert_eq!(single, many);
    }
}
