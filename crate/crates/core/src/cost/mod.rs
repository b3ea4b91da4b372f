//! Ops/Bytes descriptors, operational intensity and the roofline model with
//! derated ("effective") ceilings.

mod analytic;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

pub use analytic::{
    analytic_breakdown, analytic_bytes, cost_descriptor, decay_generation_mults, CostDescriptor, Counting, OpBreakdown,
};

use crate::config::KeyValues;
use crate::error::{Error, Result};

/// Hardware ceilings and the metadata the simulator and chunk planner need.
///
/// The effective ceilings are the theoretical ones multiplied by `derating`.
#[derive(Debug, Clone, PartialEq)]
pub struct NpuDescriptor {
    /// Theoretical compute ceiling, GOP/s.
    pub peak_compute_gops: f64,
    /// Theoretical memory bandwidth, GB/s.
    pub peak_bandwidth_gbs: f64,
    /// Achievable fraction of both peaks, in `(0, 1]`.
    pub derating: f64,
    pub scratchpad_bytes: u64,
    pub dma_bandwidth_gbs: f64,
    pub shave_cores: u32,
    pub shave_clock_ghz: f64,
    pub pe_rows: u32,
    pub pe_cols: u32,
    /// Board power, metadata only.
    pub power_watts: f64,
}

impl Default for NpuDescriptor {
    fn default() -> Self {
        Self {
            peak_compute_gops: 10_000.0,
            peak_bandwidth_gbs: 64.0,
            derating: 0.05,
            scratchpad_bytes: 4 * 1024 * 1024,
            dma_bandwidth_gbs: 64.0,
            shave_cores: 8,
            shave_clock_ghz: 1.4,
            pe_rows: 128,
            pe_cols: 128,
            power_watts: 35.0,
        }
    }
}

impl NpuDescriptor {
    pub fn effective_compute(&self) -> f64 {
        self.peak_compute_gops * self.derating
    }

    pub fn effective_bandwidth(&self) -> f64 {
        self.peak_bandwidth_gbs * self.derating
    }

    /// Same ceilings with `derating = 1`.
    pub fn theoretical(&self) -> Self {
        Self {
            derating: 1.0,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("peak_compute_gops", self.peak_compute_gops),
            ("peak_bandwidth_gbs", self.peak_bandwidth_gbs),
            ("dma_bandwidth_gbs", self.dma_bandwidth_gbs),
            ("shave_clock_ghz", self.shave_clock_ghz),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.derating > 0.0 && self.derating <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "derating must lie in (0, 1], got {}",
                self.derating
            )));
        }
        if self.scratchpad_bytes == 0 || self.shave_cores == 0 {
            return Err(Error::InvalidConfig(
                "scratchpad_bytes and shave_cores must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Reads a `key = value` file. Keys not present keep their default.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_key_values(&KeyValues::load(path)?)
    }

    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        let mut npu = Self::default();
        for e in kv.entries() {
            match e.key.as_str() {
                "peak_compute_gops" => npu.peak_compute_gops = kv.positive(e)?,
                "peak_bandwidth_gbs" => npu.peak_bandwidth_gbs = kv.positive(e)?,
                "derating" => {
                    let d = kv.positive(e)?;
                    if d > 1.0 {
                        return Err(kv.error(e, format!("derating must lie in (0, 1], got {d}")));
                    }
                    npu.derating = d;
                }
                "scratchpad_bytes" => npu.scratchpad_bytes = kv.value(e)?,
                "dma_bandwidth_gbs" => npu.dma_bandwidth_gbs = kv.positive(e)?,
                "shave_cores" => npu.shave_cores = kv.value(e)?,
                "shave_clock_ghz" => npu.shave_clock_ghz = kv.positive(e)?,
                "pe_rows" => npu.pe_rows = kv.value(e)?,
                "pe_cols" => npu.pe_cols = kv.value(e)?,
                "power_watts" => npu.power_watts = kv.non_negative(e)?,
                _ => return Err(kv.unknown_key(e)),
            }
        }
        npu.validate().map_err(|err| Error::Parse {
            path: kv.path().to_path_buf(),
            line: 0,
            message: err.to_string(),
        })?;
        Ok(npu)
    }

    pub fn to_config_string(&self) -> String {
        format!(
            "peak_compute_gops = {}\npeak_bandwidth_gbs = {}\nderating = {}\nscratchpad_bytes = {}\n\
             dma_bandwidth_gbs = {}\nshave_cores = {}\nshave_clock_ghz = {}\npe_rows = {}\npe_cols = {}\n\
             power_watts = {}\n",
            self.peak_compute_gops,
            self.peak_bandwidth_gbs,
            self.derating,
            self.scratchpad_bytes,
            self.dma_bandwidth_gbs,
            self.shave_cores,
            self.shave_clock_ghz,
            self.pe_rows,
            self.pe_cols,
            self.power_watts,
        )
    }
}

/// Intensity at which the bandwidth roof meets the compute roof.
pub fn critical_intensity(npu: &NpuDescriptor) -> f64 {
    npu.effective_compute() / npu.effective_bandwidth()
}

/// `min(pi_eff, beta_eff * I)` in GOP/s.
pub fn roofline_bound(intensity: f64, npu: &NpuDescriptor) -> f64 {
    npu.effective_compute().min(npu.effective_bandwidth() * intensity)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UtilizationMode {
    /// Measured over the roofline bound at the operator's intensity.
    BoundRelative,
    /// Measured over the effective compute ceiling.
    ComputeRoofRelative,
}

impl UtilizationMode {
    pub fn name(self) -> &'static str {
        match self {
            UtilizationMode::BoundRelative => "bound_relative",
            UtilizationMode::ComputeRoofRelative => "compute_roof_relative",
        }
    }
}

impl fmt::Display for UtilizationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for UtilizationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bound_relative" => Ok(UtilizationMode::BoundRelative),
            "compute_roof_relative" => Ok(UtilizationMode::ComputeRoofRelative),
            other => Err(Error::InvalidConfig(format!("unknown utilization mode `{other}`"))),
        }
    }
}

/// Fraction of the chosen denominator achieved by `measured` GOP/s.
pub fn utilization(measured: f64, intensity: f64, npu: &NpuDescriptor, mode: UtilizationMode) -> f64 {
    match mode {
        UtilizationMode::BoundRelative => measured / roofline_bound(intensity, npu),
        UtilizationMode::ComputeRoofRelative => measured / npu.effective_compute(),
    }
}

/// GOP/s achieved by `ops` scalar operations in `latency_ms` milliseconds.
pub fn gops(ops: f64, latency_ms: f64) -> f64 {
    ops / (latency_ms / 1e3) / 1e9
}

/// One operator placed on the roofline. `bound` and `utilization` follow
/// `mode`: for compute-roof-relative points `bound` is the compute ceiling.
#[derive(Debug, Clone, PartialEq)]
pub struct RooflinePoint {
    pub label: String,
    pub intensity: f64,
    pub measured: f64,
    pub bound: f64,
    pub utilization: f64,
    pub mode: UtilizationMode,
}

impl RooflinePoint {
    pub fn new(
        label: impl Into<String>,
        intensity: f64,
        measured: f64,
        npu: &NpuDescriptor,
        mode: UtilizationMode,
    ) -> Self {
        let bound = match mode {
            UtilizationMode::BoundRelative => roofline_bound(intensity, npu),
            UtilizationMode::ComputeRoofRelative => npu.effective_compute(),
        };
        Self {
            label: label.into(),
            intensity,
            measured,
            bound,
            utilization: measured / bound,
            mode,
        }
    }
}

/// Key/value cache size in bytes: `2 * layers * n * d_model * kv_fraction * p`.
///
/// `kv_heads_fraction` is the share of attention heads that carry their own
/// keys and values (1 for multi-head, below 1 for grouped-query attention).
pub fn kv_cache_footprint(n: u64, layers: u64, d_model: u64, kv_heads_fraction: f64, precision_bytes: u64) -> f64 {
    2.0 * layers as f64 * n as f64 * d_model as f64 * kv_heads_fraction * precision_bytes as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KvCacheShape {
    pub layers: u64,
    pub d_model: u64,
    pub kv_heads_fraction: f64,
    pub precision_bytes: u64,
    pub bytes: f64,
}

/// Smallest cache over a grid of common decoder shapes that exceeds
/// `threshold_bytes` at `n` tokens, or `None` if none does.
pub fn smallest_kv_cache_above(n: u64, threshold_bytes: f64) -> Option<KvCacheShape> {
    const LAYERS: [u64; 6] = [12, 16, 24, 28, 32, 40];
    const D_MODEL: [u64; 5] = [768, 1024, 2048, 3072, 4096];
    const KV_FRACTION: [f64; 4] = [0.125, 0.25, 0.5, 1.0];
    let mut best: Option<KvCacheShape> = None;
    for layers in LAYERS {
        for d_model in D_MODEL {
            for kv_heads_fraction in KV_FRACTION {
                let bytes = kv_cache_footprint(n, layers, d_model, kv_heads_fraction, 2);
                if bytes > threshold_bytes && best.is_none_or(|b| bytes < b.bytes) {
                    best = Some(KvCacheShape {
                        layers,
                        d_model,
                        kv_heads_fraction,
                        precision_bytes: 2,
                        bytes,
                    });
                }
            }
        }
    }
    best
}

/// Sampled growth terms `(n * d, n^2 * d)`: cache memory and attention compute.
pub fn memory_compute_complexity(n: u64, d: u64) -> (u64, u64) {
    (n * d, n * n * d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn default_ceilings() {
        let npu = NpuDescriptor::default();
        assert_abs_diff_eq!(npu.effective_compute(), 500.0, epsilon = 1e-9);
        assert_abs_diff_eq!(npu.effective_bandwidth(), 3.2, epsilon = 1e-12);
        assert_abs_diff_eq!(critical_intensity(&npu), 156.25, epsilon = 1e-9);
        assert_abs_diff_eq!(critical_intensity(&npu.theoretical()), 156.25, epsilon = 1e-9);
    }

    #[test]
    fn equal_ceilings_cross_at_one() {
        let npu = NpuDescriptor {
            peak_compute_gops: 80.0,
            peak_bandwidth_gbs: 80.0,
            ..NpuDescriptor::default()
        };
        assert_abs_diff_eq!(critical_intensity(&npu), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn bounds_on_both_sides_of_the_kink() {
        let npu = NpuDescriptor::default();
        assert_abs_diff_eq!(roofline_bound(16.0, &npu), 51.2, epsilon = 1e-9);
        assert_abs_diff_eq!(roofline_bound(61.13, &npu), 195.616, epsilon = 1e-9);
        assert_eq!(roofline_bound(156.25, &npu), 500.0);
        assert_eq!(roofline_bound(1e4, &npu), 500.0);
        let eps = 1e-6;
        let left = roofline_bound(156.25 - eps, &npu);
        let right = roofline_bound(156.25 + eps, &npu);
        assert!((right - left).abs() < 1e-4);
        assert!(left < 500.0);
    }

    #[test]
    fn utilization_modes() {
        let npu = NpuDescriptor::default();
        let lin = utilization(14.0, 16.0, &npu, UtilizationMode::BoundRelative);
        assert_abs_diff_eq!(lin, 0.2734375, epsilon = 1e-12);
        let ret = utilization(53.5, 50.0, &npu, UtilizationMode::BoundRelative);
        assert_abs_diff_eq!(ret, 0.334375, epsilon = 1e-12);
        let causal = utilization(21.4, 61.13, &npu, UtilizationMode::ComputeRoofRelative);
        assert_abs_diff_eq!(causal, 0.0428, epsilon = 1e-12);
        let p = RooflinePoint::new("causal", 61.13, 21.4, &npu, UtilizationMode::ComputeRoofRelative);
        assert_eq!(p.bound, 500.0);
    }

    #[test]
    fn kv_cache_is_linear_and_search_finds_a_shape() {
        assert_eq!(kv_cache_footprint(0, 32, 4096, 1.0, 2), 0.0);
        let one = kv_cache_footprint(1000, 24, 2048, 0.25, 2);
        assert_eq!(kv_cache_footprint(2000, 24, 2048, 0.25, 2), 2.0 * one);
        let threshold = 768.0 * 1024.0 * 1024.0;
        let shape = smallest_kv_cache_above(16384, threshold).unwrap();
        assert!(shape.bytes > threshold);
        let again = kv_cache_footprint(16384, shape.layers, shape.d_model, shape.kv_heads_fraction, 2);
        assert_eq!(again, shape.bytes);
    }

    #[test]
    fn complexity_samples() {
        assert_eq!(memory_compute_complexity(2, 3), (6, 12));
        let (_, c1) = memory_compute_complexity(100, 8);
        let (_, c2) = memory_compute_complexity(200, 8);
        assert_eq!(c2, 4 * c1);
    }

    #[test]
    fn config_round_trip_and_errors() {
        let npu = NpuDescriptor {
            derating: 0.1,
            scratchpad_bytes: 1 << 20,
            ..NpuDescriptor::default()
        };
        let kv = KeyValues::parse(&npu.to_config_string(), "npu.cfg").unwrap();
        assert_eq!(NpuDescriptor::from_key_values(&kv).unwrap(), npu);

        let kv = KeyValues::parse("derating = 0.05\nbogus = 1\n", "npu.cfg").unwrap();
        assert!(matches!(
            NpuDescriptor::from_key_values(&kv),
            Err(Error::Parse { line: 2, .. })
        ));
        let kv = KeyValues::parse("derating = 1.5\n", "npu.cfg").unwrap();
        assert!(matches!(
            NpuDescriptor::from_key_values(&kv),
            Err(Error::Parse { line: 1, .. })
        ));
    }
}
