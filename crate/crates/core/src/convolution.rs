//! Exact convolution of lattice distributions.
//!
//! The sum of two independent variables on compatible lattices is computed
//! by the naive kernel — every support pair `(i, j)` adds `f(i)·g(j)` to the
//! key `i + j` — or by an FFT fast path that multiplies the dense lattice
//! windows and is equivalent to the naive kernel within 1e-10 per mass.
//! [`Strategy::Auto`] picks the FFT only when the naive pair count would be
//! large *and* the dense result window fits the configured budget; outside
//! the budget it falls back to a sparse map so huge sparse lattices (a span
//! of millions with a dozen occupied points) stay cheap.
//!
//! `convolve_power` raises a distribution to an n-fold sum with
//! exponentiation by squaring, so 5000-fold sums cost ~24 convolutions
//! instead of 5000.

use std::collections::BTreeMap;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::decimal::Decimal;
use crate::distribution::{pairwise_sum, DistError, Distribution};

/// Pair-count above which [`Strategy::Auto`] prefers the FFT path.
pub const DEFAULT_NAIVE_COST_THRESHOLD: u64 = 10_000_000;
/// Largest dense window (lattice points) the engine will materialize.
pub const DEFAULT_WINDOW_BUDGET: usize = 1 << 24;

/// Which kernel to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    /// Cost-based choice between the naive kernel and the FFT.
    #[default]
    Auto,
    /// Always the exact pairwise kernel.
    Naive,
    /// Always the FFT; fails when the window exceeds the budget.
    Fft,
}

/// Knobs for one convolution (or a whole power ladder).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvolutionConfig {
    pub strategy: Strategy,
    /// Naive pair count above which Auto switches to the FFT.
    pub naive_cost_threshold: u64,
    /// Dense-window ceiling for both the FFT and the dense naive kernel.
    pub window_budget: usize,
    /// Drop masses below this after convolving, then renormalize.
    /// 0 (the default) keeps every lattice point, including zero-mass ones.
    pub prune_eps: f64,
}

impl Default for ConvolutionConfig {
    fn default() -> ConvolutionConfig {
        ConvolutionConfig {
            strategy: Strategy::Auto,
            naive_cost_threshold: DEFAULT_NAIVE_COST_THRESHOLD,
            window_budget: DEFAULT_WINDOW_BUDGET,
            prune_eps: 0.0,
        }
    }
}

/// Numerical health report from one FFT convolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FftDiagnostics {
    /// Dense result window, in lattice points.
    pub window_len: usize,
    /// Power-of-two transform length actually used.
    pub fft_len: usize,
    /// Largest negative round-off mass that was clamped to zero.
    pub max_clamped_negative: f64,
}

#[derive(Debug, Error)]
pub enum ConvError {
    #[error("incompatible quanta {left} and {right}: neither divides the other")]
    IncompatibleQuanta { left: Decimal, right: Decimal },
    #[error("dense window of {window} lattice points exceeds the budget of {budget}")]
    WindowTooLarge { window: u128, budget: usize },
    #[error("fold count must be at least 1")]
    FoldCountZero,
    #[error("convolution leaves the lattice: {0}")]
    LatticeOverflow(String),
    #[error(transparent)]
    Dist(#[from] DistError),
}

/// Distribution of `X + W` for independent `X ~ f`, `W ~ g`, with the
/// default configuration.
pub fn convolve(f: &Distribution, g: &Distribution) -> Result<Distribution, ConvError> {
    convolve_with(f, g, &ConvolutionConfig::default())
}

/// [`convolve`] with explicit strategy/budget/pruning knobs.
pub fn convolve_with(
    f: &Distribution,
    g: &Distribution,
    cfg: &ConvolutionConfig,
) -> Result<Distribution, ConvError> {
    convolve_impl(f, g, cfg).map(|(d, _)| d)
}

/// Forced-FFT convolution with the default budget.
pub fn fft_convolve(f: &Distribution, g: &Distribution) -> Result<Distribution, ConvError> {
    let cfg = ConvolutionConfig {
        strategy: Strategy::Fft,
        ..ConvolutionConfig::default()
    };
    fft_convolve_with(f, g, &cfg).map(|(d, _)| d)
}

/// Forced-FFT convolution returning the clamp/renormalization diagnostics.
pub fn fft_convolve_with(
    f: &Distribution,
    g: &Distribution,
    cfg: &ConvolutionConfig,
) -> Result<(Distribution, FftDiagnostics), ConvError> {
    let cfg = ConvolutionConfig {
        strategy: Strategy::Fft,
        ..*cfg
    };
    let (d, diag) = convolve_impl(f, g, &cfg)?;
    Ok((d, diag.expect("forced FFT strategy always produces diagnostics")))
}

/// Distribution of `X − W` for independent `X ~ f`, `W ~ g`.
pub fn subtract_convolve(f: &Distribution, g: &Distribution) -> Result<Distribution, ConvError> {
    subtract_convolve_with(f, g, &ConvolutionConfig::default())
}

/// [`subtract_convolve`] with explicit knobs: convolve `f` with `g`
/// mirrored through zero.
pub fn subtract_convolve_with(
    f: &Distribution,
    g: &Distribution,
    cfg: &ConvolutionConfig,
) -> Result<Distribution, ConvError> {
    let mirrored = g.linear_transform(Decimal::from(-1), Decimal::ZERO)?;
    convolve_with(f, &mirrored, cfg)
}

/// `f^{*n}`: the distribution of the sum of `n` independent draws from `f`.
pub fn convolve_power(f: &Distribution, n: u64) -> Result<Distribution, ConvError> {
    convolve_power_with(f, n, &ConvolutionConfig::default())
}

/// [`convolve_power`] with explicit knobs. Exponentiation by squaring,
/// folding squares in from the lowest bit of `n` upward.
pub fn convolve_power_with(
    f: &Distribution,
    n: u64,
    cfg: &ConvolutionConfig,
) -> Result<Distribution, ConvError> {
    if n == 0 {
        return Err(ConvError::FoldCountZero);
    }
    if n == 1 {
        return Ok(f.clone());
    }
    let mut result: Option<Distribution> = None;
    let mut square = f.clone();
    let mut m = n;
    loop {
        if m & 1 == 1 {
            result = Some(match result {
                None => square.clone(),
                Some(r) => convolve_with(&r, &square, cfg)?,
            });
        }
        m >>= 1;
        if m == 0 {
            break;
        }
        square = convolve_with(&square, &square, cfg)?;
    }
    Ok(result.expect("n ≥ 1 sets at least one bit"))
}

/// Operands rescaled onto one common lattice.
struct Aligned {
    quantum: Decimal,
    f: Vec<(i64, f64)>,
    g: Vec<(i64, f64)>,
}

fn is_point_at_zero(d: &Distribution) -> bool {
    d.support_len() == 1 && d.min_index() == 0
}

/// Finds the common (finer) lattice and rescales both index sets onto it.
/// A point mass at zero sits on index 0 of any lattice, so it simply adopts
/// the other operand's quantum.
fn align_lattices(f: &Distribution, g: &Distribution) -> Result<Aligned, ConvError> {
    let collect = |d: &Distribution| d.iter().collect::<Vec<_>>();
    let rescale = |d: &Distribution, k: i128| -> Result<Vec<(i64, f64)>, ConvError> {
        d.iter()
            .map(|(i, m)| {
                i64::try_from(i as i128 * k)
                    .map(|i| (i, m))
                    .map_err(|_| ConvError::LatticeOverflow(format!("index {i} × {k}")))
            })
            .collect()
    };

    if f.quantum() == g.quantum() || is_point_at_zero(g) {
        Ok(Aligned {
            quantum: f.quantum(),
            f: collect(f),
            g: collect(g),
        })
    } else if is_point_at_zero(f) {
        Ok(Aligned {
            quantum: g.quantum(),
            f: collect(f),
            g: collect(g),
        })
    } else if let Some(k) = f.quantum().div_exact(&g.quantum()) {
        // g's step is k times coarser; spread its indexes onto f's lattice
        Ok(Aligned {
            quantum: f.quantum(),
            f: collect(f),
            g: rescale(g, k)?,
        })
    } else if let Some(k) = g.quantum().div_exact(&f.quantum()) {
        Ok(Aligned {
            quantum: g.quantum(),
            f: rescale(f, k)?,
            g: collect(g),
        })
    } else {
        Err(ConvError::IncompatibleQuanta {
            left: f.quantum(),
            right: g.quantum(),
        })
    }
}

fn convolve_impl(
    f: &Distribution,
    g: &Distribution,
    cfg: &ConvolutionConfig,
) -> Result<(Distribution, Option<FftDiagnostics>), ConvError> {
    let lat = align_lattices(f, g)?;
    let (fmin, fmax) = (lat.f[0].0, lat.f[lat.f.len() - 1].0);
    let (gmin, gmax) = (lat.g[0].0, lat.g[lat.g.len() - 1].0);
    let rmin = fmin
        .checked_add(gmin)
        .ok_or_else(|| ConvError::LatticeOverflow(format!("{fmin} + {gmin}")))?;
    let rmax = fmax
        .checked_add(gmax)
        .ok_or_else(|| ConvError::LatticeOverflow(format!("{fmax} + {gmax}")))?;
    let window = (rmax as i128 - rmin as i128 + 1) as u128;
    let fits = window <= cfg.window_budget as u128;

    let use_fft = match cfg.strategy {
        Strategy::Naive => false,
        Strategy::Fft => {
            if !fits {
                return Err(ConvError::WindowTooLarge {
                    window,
                    budget: cfg.window_budget,
                });
            }
            true
        }
        Strategy::Auto => {
            let cost = lat.f.len() as u128 * lat.g.len() as u128;
            cost > cfg.naive_cost_threshold as u128 && fits
        }
    };

    if use_fft {
        let (masses, diag) = fft_kernel(&lat.f, &lat.g, rmin, window as usize);
        let d = finish(lat.quantum, masses, cfg, true)?;
        Ok((d, Some(diag)))
    } else {
        let masses = if fits {
            naive_dense(&lat.f, &lat.g, rmin, window as usize)
        } else {
            naive_sparse(&lat.f, &lat.g)
        };
        let d = finish(lat.quantum, masses, cfg, false)?;
        Ok((d, None))
    }
}

/// Pairwise kernel over a dense accumulator. Every visited cell becomes a
/// lattice key, even when its products underflowed to zero — the key count
/// of an n-fold sum is part of the operation's contract.
fn naive_dense(
    f: &[(i64, f64)],
    g: &[(i64, f64)],
    rmin: i64,
    window: usize,
) -> BTreeMap<i64, f64> {
    let mut acc = vec![0.0f64; window];
    let mut touched = vec![false; window];
    for &(i, fm) in f {
        for &(j, gm) in g {
            let cell = (i + j - rmin) as usize;
            acc[cell] += fm * gm;
            touched[cell] = true;
        }
    }
    acc.iter()
        .zip(&touched)
        .enumerate()
        .filter(|(_, (_, &t))| t)
        .map(|(cell, (&m, _))| (rmin + cell as i64, m))
        .collect()
}

/// Pairwise kernel on a map, for windows too wide to materialize densely.
/// Same visit order as [`naive_dense`], so the two agree bit for bit.
fn naive_sparse(f: &[(i64, f64)], g: &[(i64, f64)]) -> BTreeMap<i64, f64> {
    let mut acc = BTreeMap::new();
    for &(i, fm) in f {
        for &(j, gm) in g {
            *acc.entry(i + j).or_insert(0.0) += fm * gm;
        }
    }
    acc
}

/// Dense cyclic convolution via forward/pointwise/inverse FFT. Negative
/// round-off is clamped to zero (its worst magnitude reported in the
/// diagnostics) and every window cell is kept as a lattice key; the caller
/// renormalizes.
fn fft_kernel(
    f: &[(i64, f64)],
    g: &[(i64, f64)],
    rmin: i64,
    window: usize,
) -> (BTreeMap<i64, f64>, FftDiagnostics) {
    let fft_len = window.next_power_of_two();
    let fmin = f[0].0;
    let gmin = g[0].0;

    let mut fa = vec![Complex::new(0.0f64, 0.0); fft_len];
    for &(i, m) in f {
        fa[(i - fmin) as usize].re = m;
    }
    let mut ga = vec![Complex::new(0.0f64, 0.0); fft_len];
    for &(j, m) in g {
        ga[(j - gmin) as usize].re = m;
    }

    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(fft_len);
    forward.process(&mut fa);
    forward.process(&mut ga);
    for (a, b) in fa.iter_mut().zip(&ga) {
        *a *= b;
    }
    planner.plan_fft_inverse(fft_len).process(&mut fa);

    let scale = 1.0 / fft_len as f64;
    let mut max_clamped = 0.0f64;
    let masses = fa[..window]
        .iter()
        .enumerate()
        .map(|(cell, c)| {
            let mut m = c.re * scale;
            if m < 0.0 {
                max_clamped = max_clamped.max(-m);
                m = 0.0;
            }
            (rmin + cell as i64, m)
        })
        .collect();

    (
        masses,
        FftDiagnostics {
            window_len: window,
            fft_len,
            max_clamped_negative: max_clamped,
        },
    )
}

/// Optional pruning, then construction. `force_renorm` divides by the total
/// unconditionally (the FFT path always renormalizes after clamping);
/// otherwise the constructor's own 1e-9 tolerance decides.
fn finish(
    quantum: Decimal,
    mut masses: BTreeMap<i64, f64>,
    cfg: &ConvolutionConfig,
    force_renorm: bool,
) -> Result<Distribution, ConvError> {
    let mut renorm = force_renorm;
    if cfg.prune_eps > 0.0 {
        masses.retain(|_, m| *m >= cfg.prune_eps);
        renorm = true;
    }
    if renorm && !masses.is_empty() {
        let terms: Vec<f64> = masses.values().copied().collect();
        let total = pairwise_sum(&terms);
        if total.is_finite() && total > 0.0 {
            for m in masses.values_mut() {
                *m /= total;
            }
        }
    }
    Ok(Distribution::from_index_masses(quantum, masses, None)?)
}
