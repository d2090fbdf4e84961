use std::collections::BTreeMap;

use serde::Serialize;

use crate::rational::Ratio;

/// Simulated device conditions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DeviceProfile {
    pub net_latency_ms: u64,
    pub net_bandwidth_kbps: u64,
    pub battery_pct: u8,
    pub battery_drain_pct_per_s: Ratio,
    pub cpu_factor: Ratio,
    pub cache_hit_ms: u64,
    pub prefetch_battery_min: u8,
}

impl Default for DeviceProfile {
    fn default() -> Self {
        DeviceProfile {
            net_latency_ms: 100,
            net_bandwidth_kbps: 1000,
            battery_pct: 80,
            battery_drain_pct_per_s: Ratio::ZERO,
            cpu_factor: Ratio::ONE,
            cache_hit_ms: 1,
            prefetch_battery_min: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("`{key}`: {reason}")]
pub struct ProfileError {
    pub key: String,
    pub reason: String,
}

impl DeviceProfile {
    pub const KEYS: [&'static str; 7] = [
        "net_latency_ms",
        "net_bandwidth_kbps",
        "battery_pct",
        "battery_drain_pct_per_s",
        "cpu_factor",
        "cache_hit_ms",
        "prefetch_battery_min",
    ];

    /// Sets one field from its textual value. Unknown keys are errors.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ProfileError> {
        let err = |reason: &str| ProfileError {
            key: key.to_string(),
            reason: reason.to_string(),
        };
        let int = || value.parse::<u64>().map_err(|_| err("expected a non-negative integer"));
        let pct = || match value.parse::<u8>() {
            Ok(n) if n <= 100 => Ok(n),
            _ => Err(err("expected an integer in 0..=100")),
        };
        let ratio = || value.parse::<Ratio>().map_err(|e| err(&e.to_string()));
        match key {
            "net_latency_ms" => self.net_latency_ms = int()?,
            "net_bandwidth_kbps" => match int()? {
                0 => return Err(err("must be positive")),
                n => self.net_bandwidth_kbps = n,
            },
            "battery_pct" => self.battery_pct = pct()?,
            "battery_drain_pct_per_s" => self.battery_drain_pct_per_s = ratio()?,
            "cpu_factor" => {
                let r = ratio()?;
                if r.is_zero() {
                    return Err(err("must be positive"));
                }
                self.cpu_factor = r;
            }
            "cache_hit_ms" => self.cache_hit_ms = int()?,
            "prefetch_battery_min" => self.prefetch_battery_min = pct()?,
            _ => return Err(err("unknown profile key")),
        }
        Ok(())
    }

    /// Copy with the runtime settings of a technique's backend services and
    /// device monitors applied. Keys that are not profile fields are ignored.
    pub fn with_runtime(&self, runtime: Option<&BTreeMap<String, String>>) -> Result<Self, ProfileError> {
        let mut out = self.clone();
        for (k, v) in runtime.into_iter().flatten() {
            if Self::KEYS.contains(&k.as_str()) {
                out.set(k, v)?;
            }
        }
        Ok(out)
    }

    /// Battery level at simulated time `t_ms`, never below zero.
    pub fn battery_at(&self, t_ms: u64) -> Ratio {
        let drained = self.battery_drain_pct_per_s.inner()
            * num_rational::Rational64::new(t_ms as i64, 1000);
        let level = num_rational::Rational64::from_integer(i64::from(self.battery_pct)) - drained;
        if level < num_rational::Rational64::from_integer(0) {
            Ratio::ZERO
        } else {
            Ratio::new(*level.numer(), *level.denom())
        }
    }
}
