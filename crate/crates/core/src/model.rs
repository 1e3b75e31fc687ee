//! Domain types and the closed-form radio and latency formulas.
//!
//! All quantities are SI: bits, seconds, hertz and watts. Conversions from
//! dBm happen once, when a config is parsed, through [`dbm_to_watts`].

use crate::error::{Error, Result};

/// One unit of work generated by a UE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Task {
    pub id: u64,
    pub ue_id: u32,
    pub size_bits: f64,
    pub arrival_s: f64,
    /// Absolute deadline.
    pub deadline_s: f64,
}

impl Task {
    pub fn new(
        id: u64,
        ue_id: u32,
        size_bits: f64,
        arrival_s: f64,
        deadline_s: f64,
    ) -> Result<Self> {
        let task = Self {
            id,
            ue_id,
            size_bits,
            arrival_s,
            deadline_s,
        };
        task.validate()?;
        Ok(task)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.size_bits.is_finite() && self.size_bits > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "task {}: size_bits must be positive, got {}",
                self.id, self.size_bits
            )));
        }
        if !(self.arrival_s.is_finite() && self.arrival_s >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "task {}: arrival_s must be non-negative, got {}",
                self.id, self.arrival_s
            )));
        }
        if !(self.deadline_s.is_finite() && self.deadline_s > self.arrival_s) {
            return Err(Error::InvalidArgument(format!(
                "task {}: deadline_s {} must be after arrival_s {}",
                self.id, self.deadline_s, self.arrival_s
            )));
        }
        Ok(())
    }
}

/// Channel constants shared by every UE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioConfig {
    pub total_bandwidth_hz: f64,
    pub guard_band_fraction: f64,
    pub rb_bandwidth_hz: f64,
    pub tx_power_w: f64,
    /// Dimensionless, identical for all UEs.
    pub channel_gain: f64,
    pub noise_power_w: f64,
}

impl Default for RadioConfig {
    /// 20 MHz carrier with a 10% guard band, 180 kHz resource blocks,
    /// 200 mW transmit power, -100 dBm noise and a gain giving 20 dB SNR.
    fn default() -> Self {
        let noise_power_w = dbm_to_watts(-100.0);
        Self {
            total_bandwidth_hz: 20e6,
            guard_band_fraction: 0.1,
            rb_bandwidth_hz: 180e3,
            tx_power_w: 0.2,
            channel_gain: 5e-11,
            noise_power_w,
        }
    }
}

impl RadioConfig {
    pub fn effective_bandwidth_hz(&self) -> f64 {
        self.total_bandwidth_hz * (1.0 - self.guard_band_fraction)
    }

    /// Linear signal-to-noise ratio `p0 * g / n`.
    pub fn snr(&self) -> f64 {
        self.tx_power_w * self.channel_gain / self.noise_power_w
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("total_bandwidth_hz", self.total_bandwidth_hz),
            ("rb_bandwidth_hz", self.rb_bandwidth_hz),
            ("tx_power_w", self.tx_power_w),
            ("channel_gain", self.channel_gain),
            ("noise_power_w", self.noise_power_w),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be positive and finite, got {value}"
                )));
            }
        }
        if !(0.0..1.0).contains(&self.guard_band_fraction) {
            return Err(Error::InvalidConfig(format!(
                "guard_band_fraction must be in [0, 1), got {}",
                self.guard_band_fraction
            )));
        }
        if rb_max_unchecked(self) < 1 {
            return Err(Error::InvalidConfig(format!(
                "effective bandwidth {} Hz holds no {} Hz resource block",
                self.effective_bandwidth_hz(),
                self.rb_bandwidth_hz
            )));
        }
        Ok(())
    }
}

/// A per-task resource block grant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioAllocation {
    rb_count: u32,
    bandwidth_hz: f64,
}

impl RadioAllocation {
    pub fn new(rb_count: u32, radio: &RadioConfig) -> Result<Self> {
        let max = rb_max(radio)?;
        if rb_count == 0 || rb_count > max {
            return Err(Error::InvalidArgument(format!(
                "rb_count {rb_count} outside 1..={max}"
            )));
        }
        Ok(Self {
            rb_count,
            bandwidth_hz: f64::from(rb_count) * radio.rb_bandwidth_hz,
        })
    }

    pub fn rb_count(&self) -> u32 {
        self.rb_count
    }

    pub fn bandwidth_hz(&self) -> f64 {
        self.bandwidth_hz
    }
}

/// A MEC server attached to the gNB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServerSpec {
    pub id: usize,
    pub cpu_count: usize,
    /// Relative processing speed; 1.0 is the reference MEC CPU.
    pub speed_factor: f64,
}

impl ServerSpec {
    pub fn new(id: usize, cpu_count: usize, speed_factor: f64) -> Result<Self> {
        let spec = Self {
            id,
            cpu_count,
            speed_factor,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cpu_count == 0 {
            return Err(Error::InvalidConfig(format!(
                "server {}: cpu_count must be >= 1",
                self.id
            )));
        }
        if !(self.speed_factor.is_finite() && self.speed_factor > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "server {}: speed_factor must be positive, got {}",
                self.id, self.speed_factor
            )));
        }
        Ok(())
    }
}

/// Latency components of one task, in seconds.
///
/// `local_s`, `comm_s` and `mec_compute_s` are for the portions actually
/// processed: the local fraction on the UE and the offloaded fraction on
/// the server. `waiting_s` is queueing delay at the server CPU.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LatencyBreakdown {
    pub local_s: f64,
    pub comm_s: f64,
    pub mec_compute_s: f64,
    pub waiting_s: f64,
}

impl LatencyBreakdown {
    pub fn is_valid(&self) -> bool {
        [
            self.local_s,
            self.comm_s,
            self.mec_compute_s,
            self.waiting_s,
        ]
        .iter()
        .all(|v| v.is_finite() && *v >= 0.0)
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

fn rb_max_unchecked(radio: &RadioConfig) -> u32 {
    let ratio = radio.effective_bandwidth_hz() / radio.rb_bandwidth_hz;
    // Guard against 17.999999 style rounding when the ratio is integral.
    let rounded = ratio.round();
    let blocks = if (ratio - rounded).abs() <= 1e-9 * rounded.max(1.0) {
        rounded
    } else {
        ratio.floor()
    };
    blocks.clamp(0.0, f64::from(u32::MAX)) as u32
}

/// Number of resource blocks that fit in the effective bandwidth.
pub fn rb_max(radio: &RadioConfig) -> Result<u32> {
    radio.validate()?;
    Ok(rb_max_unchecked(radio))
}

/// Shannon rate `B * log2(1 + p0 g / n)` of a grant, in bits per second.
pub fn data_rate(alloc: &RadioAllocation, radio: &RadioConfig) -> Result<f64> {
    let rate = alloc.bandwidth_hz * radio.snr().ln_1p() / std::f64::consts::LN_2;
    if !(rate.is_finite() && rate > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "data rate is not a positive finite number ({rate})"
        )));
    }
    Ok(rate)
}

/// Roundtrip transfer time `2 S / r` for `size_bits` at `rate` bits/s.
pub fn comm_latency(size_bits: f64, rate: f64) -> Result<f64> {
    if !(rate.is_finite() && rate > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "rate must be positive, got {rate}"
        )));
    }
    Ok(2.0 * size_bits / rate)
}
