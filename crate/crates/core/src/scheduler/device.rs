use crate::error::{Error, Result};

/// Seconds per work unit for each device-side operation.
///
/// Kernels count `voxel·angle` units; accumulation counts projection values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComputeRates {
    pub forward: f64,
    pub backward: f64,
    pub accumulate: f64,
}

impl Default for ComputeRates {
    fn default() -> Self {
        Self { forward: 1e-11, backward: 1e-11, accumulate: 1e-10 }
    }
}

/// An abstract accelerator: a memory budget plus a cost model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeviceSpec {
    /// Bytes.
    pub memory_budget: u64,
    /// Bytes per second for transfers from pageable host memory.
    pub bw_pageable: f64,
    /// Bytes per second for transfers from page-locked host memory.
    pub bw_pinned: f64,
    /// Seconds per byte to page-lock host memory.
    pub pin_cost_rate: f64,
    pub compute: ComputeRates,
}

impl DeviceSpec {
    pub fn new(memory_budget: u64) -> Self {
        Self {
            memory_budget,
            bw_pageable: 4e9,
            bw_pinned: 12e9,
            pin_cost_rate: 1e-10,
            compute: ComputeRates::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.memory_budget == 0 {
            return Err(Error::InvalidParameter("device memory budget must be > 0".into()));
        }
        if !(self.bw_pageable > 0.0 && self.bw_pinned >= self.bw_pageable && self.bw_pinned.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "need bw_pinned >= bw_pageable > 0, got {} and {}",
                self.bw_pinned, self.bw_pageable
            )));
        }
        let c = self.compute;
        if [self.pin_cost_rate, c.forward, c.backward, c.accumulate].iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
            return Err(Error::InvalidParameter("cost rates must be finite and >= 0".into()));
        }
        Ok(())
    }

    pub fn bandwidth(&self, pinned: bool) -> f64 {
        if pinned {
            self.bw_pinned
        } else {
            self.bw_pageable
        }
    }
}

/// The ordered set of devices an operator may use.
#[derive(Clone, Debug, PartialEq)]
pub struct DevicePool {
    pub devices: Vec<DeviceSpec>,
    /// Share of each budget available to the planner; the rest models
    /// runtime and driver reservations.
    pub usable_fraction: f64,
}

impl DevicePool {
    pub fn new(devices: Vec<DeviceSpec>) -> Result<Self> {
        Self::with_usable_fraction(devices, 0.95)
    }

    pub fn with_usable_fraction(devices: Vec<DeviceSpec>, usable_fraction: f64) -> Result<Self> {
        if devices.is_empty() {
            return Err(Error::InvalidParameter("device pool is empty".into()));
        }
        if !(usable_fraction > 0.0 && usable_fraction <= 1.0) {
            return Err(Error::InvalidParameter(format!("usable_fraction must be in (0, 1], got {usable_fraction}")));
        }
        for d in &devices {
            d.validate()?;
        }
        Ok(Self { devices, usable_fraction })
    }

    /// `count` copies of `spec`.
    pub fn uniform(count: usize, spec: DeviceSpec) -> Result<Self> {
        Self::new(vec![spec; count])
    }

    pub fn len(&self) -> usize {
        self.devices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.devices.is_empty()
    }

    /// Planning budget: heterogeneous pools are planned against their smallest device.
    pub fn usable_budget(&self) -> u64 {
        let min = self.devices.iter().map(|d| d.memory_budget).min().unwrap_or(0);
        (min as f64 * self.usable_fraction).floor() as u64
    }
}

/// Byte-level allocation bookkeeping for one device.
#[derive(Clone, Debug)]
pub struct MemoryLedger {
    device: usize,
    budget: u64,
    allocated: u64,
    high_water: u64,
}

impl MemoryLedger {
    pub fn new(device: usize, budget: u64) -> Self {
        Self { device, budget, allocated: 0, high_water: 0 }
    }

    pub fn alloc(&mut self, bytes: u64) -> Result<()> {
        let next = self.allocated + bytes;
        if next > self.budget {
            return Err(Error::BudgetExceeded {
                device: self.device,
                requested: bytes,
                allocated: self.allocated,
                budget: self.budget,
            });
        }
        self.allocated = next;
        self.high_water = self.high_water.max(next);
        Ok(())
    }

    /// Records an allocation even past the budget.
    pub(crate) fn force_alloc(&mut self, bytes: u64) {
        self.allocated += bytes;
        self.high_water = self.high_water.max(self.allocated);
    }

    pub fn free(&mut self, bytes: u64) {
        self.allocated = self.allocated.saturating_sub(bytes);
    }

    pub fn allocated(&self) -> u64 {
        self.allocated
    }

    pub fn high_water(&self) -> u64 {
        self.high_water
    }
}
