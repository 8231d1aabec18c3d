//! Two-sided discretized Wiener paths and the time shift `(theta_t w)(s) =
//! w(s+t) - w(t)`.
//!
//! A path stores Gaussian increments on the uniform grid of `[-S, S]`,
//! anchored so that `W(0) = 0` exactly. Shifts are index offsets into the
//! same immutable buffer, so the shift composition law and re-basing hold
//! exactly on grid points. Streams are derived counter-based per
//! `(seed, channel)` so ensembles are order-independent.

use std::io::{Read, Write};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::NoiseError;
use crate::scalar::Real;

#[derive(Debug)]
struct PathData<S> {
    seed: u64,
    dt: S,
    horizon: S,
    channels: usize,
    /// Steps per side; the grid has `2 * half + 1` nodes.
    half: usize,
    /// Channel-major increments, `increments[ch * 2*half + k]` is the
    /// increment over `[-S + k dt, -S + (k+1) dt]`.
    increments: Vec<S>,
    /// Channel-major node values `W(-S + k dt)`, anchored `W(0) = 0`.
    nodes: Vec<S>,
}

impl<S: Real> PathData<S> {
    fn steps(&self) -> usize {
        2 * self.half
    }

    fn node(&self, ch: usize, k: usize) -> S {
        self.nodes[ch * (self.steps() + 1) + k]
    }

    fn increment(&self, ch: usize, k: usize) -> S {
        self.increments[ch * self.steps() + k]
    }
}

/// A realized two-sided Brownian path, shareable and immutable. Shifted
/// views reference the same increment buffer.
#[derive(Clone, Debug)]
pub struct NoisePath<S> {
    data: Arc<PathData<S>>,
    /// Grid offset of the current origin relative to the sampled origin.
    offset: i64,
}

fn build_nodes<S: Real>(increments: &[S], channels: usize, half: usize) -> Vec<S> {
    let steps = 2 * half;
    let mut nodes = vec![S::zero(); channels * (steps + 1)];
    for ch in 0..channels {
        let inc = &increments[ch * steps..(ch + 1) * steps];
        let w = &mut nodes[ch * (steps + 1)..(ch + 1) * (steps + 1)];
        w[half] = S::zero();
        for k in half..steps {
            w[k + 1] = w[k] + inc[k];
        }
        for k in (0..half).rev() {
            w[k] = w[k + 1] - inc[k];
        }
    }
    nodes
}

impl<S: Real> NoisePath<S> {
    /// Sample a fresh two-sided path on `[-horizon, horizon]`.
    ///
    /// Identical arguments produce bit-identical paths; channels use
    /// independent counter-based streams of the same seed.
    pub fn sample(seed: u64, dt: S, horizon: S, channels: usize) -> Result<Self, NoiseError> {
        Self::with_increments(seed, dt, horizon, channels, |rng, buf, sqrt_dt| {
            for x in buf.iter_mut() {
                *x = S::standard_normal(rng) * sqrt_dt;
            }
        })
    }

    /// The all-zero-increment path; models sigma = 0 runs.
    pub fn zero(dt: S, horizon: S, channels: usize) -> Result<Self, NoiseError> {
        Self::with_increments(0, dt, horizon, channels, |_, _, _| {})
    }

    fn with_increments(
        seed: u64,
        dt: S,
        horizon: S,
        channels: usize,
        fill: impl Fn(&mut ChaCha8Rng, &mut [S], S),
    ) -> Result<Self, NoiseError> {
        if dt <= S::zero() {
            return Err(NoiseError::NonPositiveStep(dt.to_f64().unwrap_or(f64::NAN)));
        }
        if horizon <= S::zero() {
            return Err(NoiseError::NonPositiveHorizon(
                horizon.to_f64().unwrap_or(f64::NAN),
            ));
        }
        if channels == 0 {
            return Err(NoiseError::NoChannels);
        }
        let ratio = (horizon / dt).to_f64().unwrap();
        let half = ratio.round() as usize;
        if half == 0 || (ratio - half as f64).abs() > 1e-6 {
            return Err(NoiseError::HorizonNotAligned {
                horizon: horizon.to_f64().unwrap(),
                dt: dt.to_f64().unwrap(),
            });
        }
        let steps = 2 * half;
        let mut increments = vec![S::zero(); channels * steps];
        let sqrt_dt = dt.sqrt();
        for ch in 0..channels {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(ch as u64 + 1);
            fill(&mut rng, &mut increments[ch * steps..(ch + 1) * steps], sqrt_dt);
        }
        let nodes = build_nodes(&increments, channels, half);
        Ok(Self {
            data: Arc::new(PathData {
                seed,
                dt,
                horizon,
                channels,
                half,
                increments,
                nodes,
            }),
            offset: 0,
        })
    }

    pub fn seed(&self) -> u64 {
        self.data.seed
    }

    pub fn dt(&self) -> S {
        self.data.dt
    }

    pub fn channels(&self) -> usize {
        self.data.channels
    }

    /// Smallest evaluable time of this (possibly shifted) view.
    pub fn min_time(&self) -> S {
        let lo = -(self.data.half as i64) - self.offset;
        self.data.dt * S::from_i64(lo).unwrap()
    }

    /// Largest evaluable time of this (possibly shifted) view.
    pub fn max_time(&self) -> S {
        let hi = self.data.half as i64 - self.offset;
        self.data.dt * S::from_i64(hi).unwrap()
    }

    /// Grid index of time `s` relative to the current origin, checking
    /// alignment and window membership.
    pub fn node_index(&self, s: S) -> Result<usize, NoiseError> {
        let ratio = (s / self.data.dt).to_f64().unwrap();
        let k = ratio.round() as i64;
        if (ratio - k as f64).abs() > 1e-6 {
            return Err(NoiseError::NotGridAligned(s.to_f64().unwrap()));
        }
        let idx = self.data.half as i64 + self.offset + k;
        if idx < 0 || idx > self.data.steps() as i64 {
            return Err(NoiseError::OutOfWindow {
                t: s.to_f64().unwrap(),
                lo: self.min_time().to_f64().unwrap(),
                hi: self.max_time().to_f64().unwrap(),
            });
        }
        Ok(idx as usize)
    }

    /// `W(s) - W(0)` for the current origin, one value per channel.
    pub fn evaluate(&self, s: S) -> Result<Vec<S>, NoiseError> {
        let idx = self.node_index(s)?;
        let origin = self.data.half as i64 + self.offset;
        Ok((0..self.data.channels)
            .map(|ch| self.data.node(ch, idx) - self.data.node(ch, origin as usize))
            .collect())
    }

    /// Single-channel variant of [`evaluate`](Self::evaluate).
    pub fn evaluate_channel(&self, ch: usize, s: S) -> Result<S, NoiseError> {
        if ch >= self.data.channels {
            return Err(NoiseError::BadChannel {
                got: ch,
                have: self.data.channels,
            });
        }
        let idx = self.node_index(s)?;
        let origin = (self.data.half as i64 + self.offset) as usize;
        Ok(self.data.node(ch, idx) - self.data.node(ch, origin))
    }

    /// Increment over `[s_k, s_k + dt]` where `s_k = k dt` relative to the
    /// current origin. `k` may be negative.
    pub fn increment(&self, ch: usize, k: i64) -> Result<S, NoiseError> {
        if ch >= self.data.channels {
            return Err(NoiseError::BadChannel {
                got: ch,
                have: self.data.channels,
            });
        }
        let idx = self.data.half as i64 + self.offset + k;
        if idx < 0 || idx >= self.data.steps() as i64 {
            return Err(NoiseError::OutOfWindow {
                t: (S::from_i64(k).unwrap() * self.data.dt).to_f64().unwrap(),
                lo: self.min_time().to_f64().unwrap(),
                hi: self.max_time().to_f64().unwrap(),
            });
        }
        Ok(self.data.increment(ch, idx as usize))
    }

    /// The time shift `theta_t`: a view with origin moved by `t`, which must
    /// be a grid multiple. The usable window shrinks accordingly.
    pub fn shift(&self, t: S) -> Result<Self, NoiseError> {
        let ratio = (t / self.data.dt).to_f64().unwrap();
        let k = ratio.round() as i64;
        if (ratio - k as f64).abs() > 1e-6 {
            return Err(NoiseError::NotGridAligned(t.to_f64().unwrap()));
        }
        let new_offset = self.offset + k;
        let origin = self.data.half as i64 + new_offset;
        if origin < 0 || origin > self.data.steps() as i64 {
            return Err(NoiseError::WindowExhausted(t.to_f64().unwrap()));
        }
        Ok(Self {
            data: Arc::clone(&self.data),
            offset: new_offset,
        })
    }

    /// Raw increments of one channel of the underlying (unshifted) data.
    pub fn raw_increments(&self, ch: usize) -> &[S] {
        let steps = self.data.steps();
        &self.data.increments[ch * steps..(ch + 1) * steps]
    }

    /// Binary dump: header `seed, dt, S, n` as little-endian 64-bit values,
    /// then raw increments channel-major as little-endian f64.
    pub fn dump<W: Write>(&self, mut w: W) -> Result<(), NoiseError> {
        if self.offset != 0 {
            return Err(NoiseError::DumpShifted);
        }
        w.write_all(&self.data.seed.to_le_bytes())?;
        w.write_all(&self.data.dt.to_f64().unwrap().to_le_bytes())?;
        w.write_all(&self.data.horizon.to_f64().unwrap().to_le_bytes())?;
        w.write_all(&(self.data.channels as u64).to_le_bytes())?;
        for x in &self.data.increments {
            w.write_all(&x.to_f64().unwrap().to_le_bytes())?;
        }
        Ok(())
    }

    /// Inverse of [`dump`](Self::dump).
    pub fn load<R: Read>(mut r: R) -> Result<Self, NoiseError> {
        let mut u = [0u8; 8];
        r.read_exact(&mut u)?;
        let seed = u64::from_le_bytes(u);
        r.read_exact(&mut u)?;
        let dt_f = f64::from_le_bytes(u);
        r.read_exact(&mut u)?;
        let horizon_f = f64::from_le_bytes(u);
        r.read_exact(&mut u)?;
        let channels = u64::from_le_bytes(u) as usize;
        let dt = S::from_f64(dt_f).ok_or_else(|| NoiseError::CorruptDump("dt".into()))?;
        let horizon =
            S::from_f64(horizon_f).ok_or_else(|| NoiseError::CorruptDump("horizon".into()))?;
        if dt_f <= 0.0 || horizon_f <= 0.0 || channels == 0 {
            return Err(NoiseError::CorruptDump("bad header".into()));
        }
        let half = (horizon_f / dt_f).round() as usize;
        let steps = 2 * half;
        let mut increments = vec![S::zero(); channels * steps];
        for x in increments.iter_mut() {
            r.read_exact(&mut u)?;
            *x = S::from_f64(f64::from_le_bytes(u))
                .ok_or_else(|| NoiseError::CorruptDump("increment".into()))?;
        }
        let nodes = build_nodes(&increments, channels, half);
        Ok(Self {
            data: Arc::new(PathData {
                seed,
                dt,
                horizon,
                channels,
                half,
                increments,
                nodes,
            }),
            offset: 0,
        })
    }
}
