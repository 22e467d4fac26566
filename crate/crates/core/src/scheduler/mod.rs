//! Out-of-core orchestration of the projectors over a pool of
//! memory-budgeted devices.
//!
//! A [`SplitPlan`] cuts the image into axial slabs and the scan into angle
//! chunks so that every device's working set fits its budget. The same
//! per-device command programs drive both the threaded executor and the
//! discrete-event [`simulate`] cost model.

mod device;
mod exec;
mod plan;
mod program;
mod sim;
mod trace;

pub use device::{ComputeRates, DevicePool, DeviceSpec, MemoryLedger};
pub use exec::{execute_backward, execute_backward_traced, execute_forward, execute_forward_traced};
pub use plan::{
    plan_backward, plan_backward_with_splits, plan_forward, plan_forward_with_splits, slab_partition, OpKind,
    SplitPlan, Tiles,
};
pub use sim::simulate;
pub use trace::{EventKind, ExecutionTrace, TraceEvent};
